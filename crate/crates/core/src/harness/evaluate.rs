use rayon::prelude::*;

use super::config::EvalConfig;
use super::manifest::{DatasetManifest, ManifestEntry, PredictionRecord, PredictionSet};
use super::report::*;
use crate::detection::{classify_image, detector_overlap, filter_by_confidence, BoundingBox, ClassLabel, ImageDecision};
use crate::error::{Error, Result};
use crate::imaging::{
    connected_components, mask_to_boxes, refine_mask, threshold_ground_truth, BinaryMask, Connectivity, MaskKind,
};
use crate::metrics::{summarize, ConfusionMatrix, NoDecisionPolicy, PrintedSummary};
use crate::pnm::{self, Raster};
use crate::saliency::{
    aggregate_saliency, attention_present, binarize_color_saliency, binarize_scalar_saliency, overlap_scores,
    OverlapScores,
};

/// Ratio tolerance used when comparing derived metrics with published ones.
pub const PUBLISHED_TOLERANCE: f64 = 0.001;

type Outcome<T> = (String, std::result::Result<T, String>);

/// Runs `f` on every entry with `workers` threads. Results come back in
/// manifest (image-id) order regardless of the worker count.
fn per_image<T: Send>(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    workers: usize,
    f: impl Fn(&ManifestEntry, Option<&PredictionRecord>) -> Result<T> + Sync,
) -> Result<Vec<Outcome<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    let mut out: Vec<Outcome<T>> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let r = f(e, predictions.get(&e.image_id)).map_err(|err| err.to_string());
                (e.image_id.clone(), r)
            })
            .collect()
    });
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

fn split<T>(outcomes: Vec<Outcome<T>>) -> (Vec<(String, T)>, Vec<ImageFailure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (image_id, r) in outcomes {
        match r {
            Ok(v) => ok.push((image_id, v)),
            Err(reason) => failed.push(ImageFailure { image_id, reason }),
        }
    }
    (ok, failed)
}

fn mask_kind(class: ClassLabel) -> MaskKind {
    if class.is_disease() {
        MaskKind::DiseaseSpot
    } else {
        MaskKind::HealthyLeaf
    }
}

/// Ground truth for an entry: the stored mask if any, otherwise the hue
/// band for `kind` (optionally refined).
fn ground_truth(entry: &ManifestEntry, kind: MaskKind, cfg: &EvalConfig) -> Result<BinaryMask> {
    if let Some(p) = &entry.gt_mask_path {
        return pnm::read_mask(p);
    }
    let image = pnm::read_ppm(&entry.image_path)?;
    let mask = threshold_ground_truth(&image, kind, &cfg.threshold);
    match &cfg.refine {
        Some(r) => refine_mask(&mask, r),
        None => Ok(mask),
    }
}

fn image_dims(entry: &ManifestEntry) -> Result<(usize, usize)> {
    Ok(pnm::read_raster(&entry.image_path)?.dims())
}

fn base_report(kind: ReportKind, manifest: &DatasetManifest, cfg: &EvalConfig, failures: Vec<ImageFailure>) -> EvaluationReport {
    EvaluationReport {
        kind,
        dataset_name: manifest.dataset_name.clone(),
        config: cfg.clone(),
        images_total: manifest.entries.len(),
        failures,
        saliency: None,
        detector_overlap: None,
        classification: None,
        attention: None,
        discrepancy_flags: Vec::new(),
        interpretation: Vec::new(),
    }
}

fn missing_class_flags(report: &crate::saliency::SaliencyReport, expected: &[ClassLabel]) -> Vec<String> {
    report
        .missing_classes
        .iter()
        .filter(|c| expected.contains(c))
        .map(|c| format!("class {c} has no scored images and is excluded from the row average"))
        .collect()
}

/// Scores colour-coded (PPM) or scalar (PGM) saliency maps against the
/// ground truth of each image's actual class.
pub fn evaluate_saliency(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    cfg: &EvalConfig,
    workers: usize,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let outcomes = per_image(manifest, predictions, workers, |entry, pred| {
        let path = pred
            .and_then(|p| p.saliency_path.as_ref())
            .ok_or_else(|| Error::Empty("no saliency map for this image".into()))?;
        let gt = ground_truth(entry, mask_kind(entry.actual_class), cfg)?;
        let sm = match pnm::read_raster(path)? {
            Raster::Rgb(img) => binarize_color_saliency(&img, &cfg.saliency),
            Raster::Gray(img) => binarize_scalar_saliency(&img, cfg.saliency.scalar_threshold),
        };
        Ok((entry.actual_class, overlap_scores(&gt, &sm)?))
    })?;
    let (ok, failures) = split(outcomes);
    let mut report = base_report(ReportKind::Saliency, manifest, cfg, failures);
    report.interpretation = vec![NOTE_PER_IMAGE.into(), NOTE_ROW_AVERAGE.into()];
    let scores: Vec<(ClassLabel, OverlapScores)> = ok.into_iter().map(|(_, v)| v).collect();
    match aggregate_saliency(&scores) {
        Ok(s) => {
            report.discrepancy_flags.extend(missing_class_flags(&s, &ClassLabel::ALL));
            report.saliency = Some(s);
        }
        Err(_) => report.discrepancy_flags.push("no image could be scored".into()),
    }
    Ok(report)
}

struct DetectorOutcome {
    actual: ClassLabel,
    overlap: OverlapScores,
    decision: ImageDecision,
}

fn gt_boxes(entry: &ManifestEntry) -> Result<Vec<BoundingBox>> {
    if let Some(boxes) = &entry.gt_boxes {
        return Ok(boxes.iter().map(|b| b.bbox).collect());
    }
    if let Some(p) = &entry.gt_mask_path {
        let mask = pnm::read_mask(p)?;
        return Ok(mask_to_boxes(&connected_components(&mask, Connectivity::Eight)));
    }
    Err(Error::Empty("no ground-truth boxes or mask for this image".into()))
}

/// Gated ROI detections: per-image localisation overlap, image-level
/// decision and the resulting confusion matrix.
pub fn evaluate_detector(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    cfg: &EvalConfig,
    workers: usize,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let outcomes = per_image(manifest, predictions, workers, |entry, pred| {
        let dets = pred
            .and_then(|p| p.detections.as_ref())
            .ok_or_else(|| Error::Empty("no detections for this image".into()))?;
        let boxes = gt_boxes(entry)?;
        let (w, h) = image_dims(entry)?;
        let kept = filter_by_confidence(dets, cfg.confidence_gate);
        Ok(DetectorOutcome {
            actual: entry.actual_class,
            overlap: detector_overlap(&kept, &boxes, w, h)?,
            decision: classify_image(dets, cfg.confidence_gate),
        })
    })?;
    let (ok, failures) = split(outcomes);
    let mut report = base_report(ReportKind::Detector, manifest, cfg, failures);
    report.interpretation = vec![NOTE_DETECTOR_OVERLAP.into(), NOTE_F_CONVENTIONS.into(), NOTE_NO_DECISION.into()];

    let overlaps: Vec<OverlapScores> = ok.iter().map(|(_, o)| o.overlap).collect();
    report.detector_overlap = OverlapSummary::from_scores(&overlaps);
    let mut cm = ConfusionMatrix::new();
    for (_, o) in &ok {
        cm.accumulate(o.actual, o.decision);
    }
    let section = ClassificationSection::new(cm, cfg.headline_policy);
    report.discrepancy_flags.extend(section.flags());
    report.classification = Some(section);
    Ok(report)
}

struct AttentionOutcome {
    actual: ClassLabel,
    present: bool,
    overlap: Option<OverlapScores>,
    decision: ImageDecision,
}

/// Scalar attention maps: overlap with disease spots for disease images, a
/// spurious-attention count for healthy ones, and a confusion matrix from
/// the externally predicted labels.
pub fn evaluate_attention(
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    cfg: &EvalConfig,
    workers: usize,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    let outcomes = per_image(manifest, predictions, workers, |entry, pred| {
        let path = pred
            .and_then(|p| p.attention_path.as_ref())
            .ok_or_else(|| Error::Empty("no attention map for this image".into()))?;
        let map = pnm::read_pgm(path)?;
        let mask = binarize_scalar_saliency(&map, cfg.saliency.scalar_threshold);
        let present = attention_present(&mask, cfg.attention_min_area);
        let overlap = if entry.actual_class.is_disease() {
            let gt = ground_truth(entry, MaskKind::DiseaseSpot, cfg)?;
            Some(overlap_scores(&gt, &mask)?)
        } else {
            None
        };
        let decision = pred
            .and_then(|p| p.predicted_class)
            .map_or(ImageDecision::NoDecision, ImageDecision::Decided);
        Ok(AttentionOutcome {
            actual: entry.actual_class,
            present,
            overlap,
            decision,
        })
    })?;
    let (ok, failures) = split(outcomes);
    let mut report = base_report(ReportKind::Attention, manifest, cfg, failures);
    report.interpretation = vec![
        NOTE_PER_IMAGE.into(),
        "attention overlap is scored on disease images only; healthy images are checked for spurious attention".into(),
        NOTE_F_CONVENTIONS.into(),
        NOTE_NO_DECISION.into(),
    ];

    let mut diag = AttentionDiagnostics::default();
    let mut cm = ConfusionMatrix::new();
    let mut scores = Vec::new();
    for (_, o) in &ok {
        cm.accumulate(o.actual, o.decision);
        if o.actual.is_disease() {
            diag.disease_images += 1;
            diag.disease_without_attention += usize::from(!o.present);
        } else {
            diag.healthy_images += 1;
            diag.spurious_attention += usize::from(o.present);
        }
        if let Some(s) = o.overlap {
            scores.push((o.actual, s));
        }
    }
    if let Ok(s) = aggregate_saliency(&scores) {
        report
            .discrepancy_flags
            .extend(missing_class_flags(&s, &[ClassLabel::EarlyBlight, ClassLabel::LateBlight]));
        report.saliency = Some(s);
    }
    let section = ClassificationSection::new(cm, cfg.headline_policy);
    report.discrepancy_flags.extend(section.flags());
    report.classification = Some(section);
    report.attention = Some(diag);
    Ok(report)
}

pub fn evaluate(
    kind: ReportKind,
    manifest: &DatasetManifest,
    predictions: &PredictionSet,
    cfg: &EvalConfig,
    workers: usize,
) -> Result<EvaluationReport> {
    match kind {
        ReportKind::Saliency => evaluate_saliency(manifest, predictions, cfg, workers),
        ReportKind::Detector => evaluate_detector(manifest, predictions, cfg, workers),
        ReportKind::Attention => evaluate_attention(manifest, predictions, cfg, workers),
    }
}

/// Runs the evaluation that produced `prior` on a second dataset and pairs
/// the two.
pub fn cross_test(
    manifest_b: &DatasetManifest,
    predictions_b: &PredictionSet,
    cfg: &EvalConfig,
    prior: &EvaluationReport,
    workers: usize,
) -> Result<CrossTestReport> {
    let cross = evaluate(prior.kind, manifest_b, predictions_b, cfg, workers)?;
    Ok(CrossTestReport {
        testing: prior.clone(),
        cross_testing: cross,
    })
}

/// Summary of a supplied confusion matrix, optionally checked against
/// published values.
pub fn matrix_report(
    source: &str,
    cm: ConfusionMatrix,
    policy: NoDecisionPolicy,
    printed: Option<&PrintedSummary>,
) -> Result<MatrixReport> {
    summarize(&cm, policy)?;
    let classification = ClassificationSection::new(cm, policy);
    let mut discrepancy_flags = classification.flags();
    if let (Some(p), Some(h)) = (printed, classification.headline()) {
        discrepancy_flags.extend(h.discrepancies(source, p, PUBLISHED_TOLERANCE));
    }
    Ok(MatrixReport {
        source: source.to_string(),
        classification,
        discrepancy_flags,
    })
}
