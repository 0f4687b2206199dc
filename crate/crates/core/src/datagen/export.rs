use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{simulate_detector_traced, DetectorNoise, NoiseTrace};
use super::rng::derive_seed;
use super::scene::{render_attention, render_saliency_overlay, Scene, SceneSampler};
use crate::error::{Error, Result};
use crate::harness::{write_manifest, write_predictions, LabeledBox, ManifestEntry, PredictionRecord};
use crate::pnm;

/// Stream salt separating detector noise from scene generation.
const DETECTOR_STREAM: u64 = 0xD37E_C7ED;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportOptions {
    pub sampler: SceneSampler,
    pub noise: DetectorNoise,
    /// Also write perfect saliency overlays, attention maps and predicted
    /// labels, for exercising the saliency and attention evaluations.
    pub with_maps: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub scenes: usize,
    pub class_counts: [usize; 3],
    pub noise: NoiseTrace,
    pub manifest: PathBuf,
    pub predictions: PathBuf,
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Writes `count` synthetic scenes under `dir`:
///
/// ```text
/// images/<id>.ppm            rendered scene
/// masks/<id>_disease.pgm     painted spots
/// masks/<id>_healthy.pgm     painted leaf minus spots
/// saliency/<id>.ppm          (with_maps) class mask in red on blue
/// attention/<id>.pgm         (with_maps) spots at 255, empty for healthy leaves
/// manifest.jsonl             class, class-appropriate mask and boxes
/// predictions.jsonl          simulated detections (+ map paths and labels)
/// ```
pub fn export_dataset(dir: &Path, count: usize, seed: u64, opts: &ExportOptions) -> Result<ExportSummary> {
    opts.noise.validate()?;
    opts.sampler.validate()?;
    for sub in ["images", "masks", "saliency", "attention"] {
        if opts.with_maps || !matches!(sub, "saliency" | "attention") {
            mkdir(&dir.join(sub))?;
        }
    }

    let rows: Vec<(ManifestEntry, PredictionRecord, NoiseTrace)> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let Scene { id, truth, .. } = opts.sampler.scene(seed, i)?;
            let image_rel = PathBuf::from(format!("images/{id}.ppm"));
            let disease_rel = PathBuf::from(format!("masks/{id}_disease.pgm"));
            let healthy_rel = PathBuf::from(format!("masks/{id}_healthy.pgm"));
            pnm::write_ppm(&dir.join(&image_rel), &truth.image)?;
            pnm::write_mask(&dir.join(&disease_rel), &truth.disease_mask)?;
            pnm::write_mask(&dir.join(&healthy_rel), &truth.healthy_mask)?;

            let (detections, trace) =
                simulate_detector_traced(&truth, &opts.noise, derive_seed(seed ^ DETECTOR_STREAM, i as u64))?;
            let mut record = PredictionRecord {
                image_id: id.clone(),
                detections: Some(detections),
                ..Default::default()
            };
            if opts.with_maps {
                let sal_rel = PathBuf::from(format!("saliency/{id}.ppm"));
                let att_rel = PathBuf::from(format!("attention/{id}.pgm"));
                pnm::write_ppm(&dir.join(&sal_rel), &render_saliency_overlay(truth.class_mask()))?;
                pnm::write_pgm(&dir.join(&att_rel), &render_attention(&truth.disease_mask))?;
                record.saliency_path = Some(sal_rel);
                record.attention_path = Some(att_rel);
                record.predicted_class = Some(truth.image_class);
            }

            let entry = ManifestEntry {
                image_id: id,
                image_path: image_rel,
                actual_class: truth.image_class,
                gt_mask_path: Some(if truth.image_class.is_disease() { disease_rel } else { healthy_rel }),
                gt_boxes: Some(truth.gt_boxes.iter().map(|&(bbox, class)| LabeledBox { bbox, class }).collect()),
            };
            Ok((entry, record, trace))
        })
        .collect::<Result<_>>()?;

    let mut summary = ExportSummary {
        scenes: count,
        manifest: dir.join("manifest.jsonl"),
        predictions: dir.join("predictions.jsonl"),
        ..Default::default()
    };
    for (entry, _, trace) in &rows {
        summary.class_counts[entry.actual_class.index()] += 1;
        summary.noise.kept += trace.kept;
        summary.noise.dropped += trace.dropped;
        summary.noise.mislabeled += trace.mislabeled;
        summary.noise.spurious += trace.spurious;
    }
    let (entries, records): (Vec<_>, Vec<_>) = rows.into_iter().map(|(e, r, _)| (e, r)).unzip();
    write_manifest(&summary.manifest, "synthetic", &entries)?;
    write_predictions(&summary.predictions, &records)?;
    Ok(summary)
}
