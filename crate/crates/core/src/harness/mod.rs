//! Dataset ingestion, evaluation runs and report emission.
//!
//! Per-image work runs on a rayon pool of the requested size; results are
//! always merged in image-id order, so reports do not depend on the number
//! of workers.

mod config;
mod evaluate;
mod manifest;
mod report;

pub use config::EvalConfig;
pub use evaluate::{
    cross_test, evaluate, evaluate_attention, evaluate_detector, evaluate_saliency, matrix_report,
    PUBLISHED_TOLERANCE,
};
pub use manifest::{
    load_manifest, load_predictions, write_manifest, write_predictions, DatasetManifest, LabeledBox, ManifestEntry,
    PredictionRecord, PredictionSet,
};
pub use report::{
    emit_report, render_report, AttentionDiagnostics, ClassificationSection, CrossTestReport, EvaluationReport,
    ImageFailure, MatrixReport, OverlapSummary, PairedMatrixReport, ReportFormat, ReportKind, ToValue, Value,
};
