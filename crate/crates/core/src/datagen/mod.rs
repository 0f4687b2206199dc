//! Deterministic synthetic leaf scenes and a simulated noisy ROI detector.
//!
//! Scenes are painted so that the default hue bands recover the disease and
//! healthy masks exactly, which makes them usable as a ground-truth oracle
//! for the whole evaluation pipeline. All randomness comes from
//! [`Xorshift64Star`], so fixtures are reproducible across platforms.

mod detector;
mod export;
mod rng;
mod scene;

pub use detector::{simulate_detector, simulate_detector_traced, DetectorNoise, NoiseTrace};
pub use export::{export_dataset, ExportOptions, ExportSummary};
pub use rng::{derive_seed, splitmix64, Xorshift64Star};
pub use scene::{
    generate_batch, generate_scene, render_attention, render_saliency_overlay, Background, Ellipse, PaintedRegion,
    Scene, SceneSampler, SceneSpec, SceneTruth, SpotSpec, LEAF_HUE_RANGE, MIN_SPOT_AREA, SPOT_HUE_RANGE,
};
