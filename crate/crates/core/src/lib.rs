//! Evaluation toolkit for region-grounded leaf-disease classifiers.
//!
//! The crate scores what a classifier looks at, not just what it predicts:
//!
//! * [`imaging`] builds ground-truth masks from hue bands and cleans them up
//!   with morphology and component filtering;
//! * [`saliency`] binarises colour-coded saliency maps and scalar attention
//!   maps and measures their pixel overlap with the ground truth;
//! * [`detection`] gates ROI detections on confidence, scores their
//!   localisation and turns them into an image-level class decision;
//! * [`metrics`] accumulates confusion matrices and derives accuracy and
//!   macro precision/recall/F;
//! * [`datagen`] renders deterministic synthetic leaf scenes and a noisy
//!   detector whose ground truth is known exactly;
//! * [`harness`] ties the above to manifests, prediction files and reports.
//!
//! Network inference is out of scope; model outputs arrive as files.

pub mod datagen;
pub mod detection;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod metrics;
pub mod pnm;
pub mod reference;
pub mod saliency;

pub use detection::{BoundingBox, ClassLabel, Detection, ImageDecision};
pub use error::{Error, Result};
pub use imaging::{BinaryMask, GrayImage, RgbImage};
pub use metrics::{ConfusionMatrix, NoDecisionPolicy, SummaryMetrics};
pub use saliency::OverlapScores;
