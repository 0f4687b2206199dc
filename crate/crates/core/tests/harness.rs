use std::path::{Path, PathBuf};
use std::process::Command;

use leafroi::datagen::{export_dataset, DetectorNoise, ExportOptions, SceneSampler};
use leafroi::harness::{
    cross_test, evaluate, evaluate_attention, evaluate_detector, evaluate_saliency, load_manifest, load_predictions,
    render_report, write_predictions, EvalConfig, PredictionRecord, ReportFormat, ReportKind,
};
use leafroi::imaging::{BinaryMask, GrayImage, RefineConfig};
use leafroi::pnm;
use leafroi::{ClassLabel, ConfusionMatrix};

struct Dataset {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Dataset {
    fn manifest(&self) -> PathBuf {
        self.root.join("manifest.jsonl")
    }
    fn predictions(&self) -> PathBuf {
        self.root.join("predictions.jsonl")
    }
}

fn dataset(count: usize, seed: u64, noise: DetectorNoise) -> Dataset {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let opts = ExportOptions {
        sampler: SceneSampler::default(),
        noise,
        with_maps: true,
    };
    export_dataset(&root, count, seed, &opts).unwrap();
    Dataset { _dir: dir, root }
}

fn noisy() -> DetectorNoise {
    DetectorNoise {
        box_jitter: 2,
        drop_rate: 0.1,
        mislabel_rate: 0.2,
        confidence_range: (0.6, 1.0),
        spurious_rate: 0.5,
    }
}

fn replace_in(path: &Path, from: &str, to: &str) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from} not found in {}", path.display());
    std::fs::write(path, text.replacen(from, to, 1)).unwrap();
}

#[test]
fn generated_manifest_matches_scene_truth() {
    let ds = dataset(100, 11, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    assert_eq!(manifest.entries.len(), 100);
    assert_eq!(manifest.dataset_name, "synthetic");
    let sampler = SceneSampler::default();
    for (i, entry) in manifest.entries.iter().enumerate() {
        let scene = sampler.scene(11, i).unwrap();
        assert_eq!(entry.image_id, scene.id);
        assert_eq!(entry.actual_class, scene.truth.image_class);
        assert_eq!(pnm::read_ppm(&entry.image_path).unwrap(), scene.truth.image);
        let boxes: Vec<_> = entry.gt_boxes.as_ref().unwrap().iter().map(|b| (b.bbox, b.class)).collect();
        assert_eq!(boxes, scene.truth.gt_boxes);
    }
}

#[test]
fn manifest_errors_name_the_offender() {
    let ds = dataset(3, 1, DetectorNoise::identity());
    let m = ds.manifest();
    replace_in(&m, "scene_00001\"", "scene_00000\"");
    let err = load_manifest(&m).unwrap_err().to_string();
    assert!(err.contains("scene_00000"), "{err}");

    let ds = dataset(3, 1, DetectorNoise::identity());
    replace_in(&ds.manifest(), "images/scene_00002.ppm", "images/nope.ppm");
    let err = load_manifest(&ds.manifest()).unwrap_err().to_string();
    assert!(err.contains("scene_00002"), "{err}");

    let ds = dataset(3, 1, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    replace_in(&ds.predictions(), "scene_00001\"", "scene_99999\"");
    let err = load_predictions(&ds.predictions(), &manifest).unwrap_err().to_string();
    assert!(err.contains("scene_99999"), "{err}");
}

#[test]
fn minimal_manifest_loads() {
    let dir = tempfile::tempdir().unwrap();
    pnm::write_ppm(&dir.path().join("a.ppm"), &leafroi::RgbImage::filled(4, 4, [0, 0, 0])).unwrap();
    let path = dir.path().join("m.jsonl");
    std::fs::write(
        &path,
        "// one entry\n{\"dataset_name\":\"tiny\"}\n\n{\"image_id\":\"a\",\"image_path\":\"a.ppm\",\"actual_class\":\"HL\"}\n",
    )
    .unwrap();
    let m = load_manifest(&path).unwrap();
    assert_eq!(m.entries.len(), 1);
    assert_eq!(m.entries[0].actual_class, ClassLabel::HealthyLeaves);
}

#[test]
fn perfect_predictions_score_perfectly() {
    let ds = dataset(40, 5, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let cfg = EvalConfig::default();

    let det = evaluate_detector(&manifest, &preds, &cfg, 2).unwrap();
    let ov = det.detector_overlap.as_ref().unwrap();
    assert_eq!((ov.mean_precision, ov.mean_recall), (1.0, 1.0));
    assert_eq!(det.classification.as_ref().unwrap().headline().unwrap().accuracy, 1.0);

    let sal = evaluate_saliency(&manifest, &preds, &cfg, 2).unwrap();
    for (class, c) in &sal.saliency.as_ref().unwrap().per_class {
        assert_eq!((c.precision_pct, c.recall_pct), (100.0, 100.0), "{class}");
    }

    let att = evaluate_attention(&manifest, &preds, &cfg, 2).unwrap();
    let diag = att.attention.as_ref().unwrap();
    assert_eq!(diag.spurious_attention, 0);
    assert_eq!(diag.disease_without_attention, 0);
    for c in att.saliency.as_ref().unwrap().per_class.values() {
        assert_eq!((c.precision_pct, c.recall_pct), (100.0, 100.0));
    }
    assert_eq!(att.classification.as_ref().unwrap().headline().unwrap().accuracy, 1.0);
}

#[test]
fn empty_saliency_maps_score_zero() {
    let ds = dataset(12, 8, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    std::fs::create_dir(ds.root.join("blank")).unwrap();
    let records: Vec<PredictionRecord> = manifest
        .entries
        .iter()
        .map(|e| {
            let rel = PathBuf::from(format!("blank/{}.pgm", e.image_id));
            let (w, h) = pnm::read_raster(&e.image_path).unwrap().dims();
            pnm::write_pgm(&ds.root.join(&rel), &GrayImage::filled(w, h, 0)).unwrap();
            PredictionRecord {
                image_id: e.image_id.clone(),
                saliency_path: Some(rel),
                ..Default::default()
            }
        })
        .collect();
    let path = ds.root.join("blank.jsonl");
    write_predictions(&path, &records).unwrap();

    let preds = load_predictions(&path, &manifest).unwrap();
    let sal = evaluate_saliency(&manifest, &preds, &EvalConfig::default(), 1).unwrap();
    assert!(sal.failures.is_empty(), "{:?}", sal.failures);
    for c in sal.saliency.as_ref().unwrap().per_class.values() {
        assert_eq!((c.precision_pct, c.recall_pct), (0.0, 0.0));
    }
}

#[test]
fn healthy_scene_without_attention_is_not_spurious() {
    let ds = dataset(30, 2, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let healthy = manifest.entries.iter().filter(|e| e.actual_class == ClassLabel::HealthyLeaves).count();
    assert!(healthy > 0);
    let att = evaluate_attention(&manifest, &preds, &EvalConfig::default(), 1).unwrap();
    let diag = att.attention.unwrap();
    assert_eq!(diag.healthy_images, healthy);
    assert_eq!(diag.spurious_attention, 0);
}

#[test]
fn unreachable_gate_leaves_every_image_undecided() {
    let ds = dataset(50, 3, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let cfg = EvalConfig {
        confidence_gate: 1.0,
        ..Default::default()
    };
    let report = evaluate_detector(&manifest, &preds, &cfg, 4).unwrap();
    let cm = &report.classification.as_ref().unwrap().confusion;
    assert_eq!(cm.counts, ConfusionMatrix::new().counts);
    assert_eq!(cm.undecided(), 50);
    assert_eq!(report.classification.as_ref().unwrap().headline().unwrap().accuracy, 0.0);
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let ds = dataset(60, 21, noisy());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let cfg = EvalConfig {
        refine: Some(RefineConfig::default()),
        ..Default::default()
    };
    for kind in [ReportKind::Saliency, ReportKind::Detector, ReportKind::Attention] {
        let one = evaluate(kind, &manifest, &preds, &cfg, 1).unwrap();
        let eight = evaluate(kind, &manifest, &preds, &cfg, 8).unwrap();
        for format in [ReportFormat::Csv, ReportFormat::Json] {
            assert_eq!(render_report(&one, format), render_report(&eight, format), "{kind:?} {format:?}");
        }
    }
}

#[test]
fn failures_are_counted_not_fatal() {
    let ds = dataset(20, 4, DetectorNoise::identity());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    // A saliency map of the wrong size for one image.
    pnm::write_ppm(&ds.root.join("saliency/scene_00003.ppm"), &leafroi::RgbImage::filled(5, 5, [255, 0, 0])).unwrap();
    // And no predictions at all for another.
    let text = std::fs::read_to_string(ds.predictions()).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.contains("scene_00007")).collect();
    std::fs::write(ds.predictions(), kept.join("\n")).unwrap();

    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let report = evaluate_saliency(&manifest, &preds, &EvalConfig::default(), 3).unwrap();
    let failed: Vec<&str> = report.failures.iter().map(|f| f.image_id.as_str()).collect();
    assert_eq!(failed, ["scene_00003", "scene_00007"]);
    assert_eq!(report.images_scored() + report.failures.len(), 20);
    assert!(report.failures[0].reason.contains("dimension"), "{}", report.failures[0].reason);
}

#[test]
fn same_dataset_cross_test_repeats_the_testing_numbers() {
    let ds = dataset(30, 9, noisy());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let cfg = EvalConfig::default();
    let testing = evaluate_detector(&manifest, &preds, &cfg, 2).unwrap();
    let paired = cross_test(&manifest, &preds, &cfg, &testing, 5).unwrap();
    assert_eq!(paired.testing, paired.cross_testing);
    let json = render_report(&paired, ReportFormat::Json);
    assert!(json.contains("\"cross_testing\""));
}

#[test]
fn emitted_reports_are_stable_and_carry_flags() {
    let ds = dataset(10, 6, noisy());
    let manifest = load_manifest(&ds.manifest()).unwrap();
    let preds = load_predictions(&ds.predictions(), &manifest).unwrap();
    let mut report = evaluate_detector(&manifest, &preds, &EvalConfig::default(), 1).unwrap();
    report.discrepancy_flags.push("row X: something, with \"quotes\"".into());
    let dir = tempfile::tempdir().unwrap();
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        leafroi::harness::emit_report(&report, format, &a).unwrap();
        leafroi::harness::emit_report(&report, format, &b).unwrap();
        let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert_eq!(ta, tb);
        let text = String::from_utf8(ta).unwrap();
        assert!(text.contains("row X: something"), "{format:?}");
    }
}

// ------------------------------------------------------------------ CLI

fn leafroi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_leafroi"))
}

#[test]
fn cli_round_trip_and_config_replay() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let status = leafroi()
        .args(["gen-synthetic", "--count", "25", "--seed", "13", "--with-maps", "--box-jitter", "1"])
        .args(["--confidence-min", "0.7", "--mislabel-rate", "0.1", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"confidence_gate": 0.75, "refine": {"radius": 1, "min_area": 8, "connectivity": 8}}"#).unwrap();
    let first = dir.path().join("first.json");
    let run = |config: &Path, out: &Path, workers: &str| {
        leafroi()
            .arg("eval-detector")
            .arg("--manifest")
            .arg(data.join("manifest.jsonl"))
            .arg("--predictions")
            .arg(data.join("predictions.jsonl"))
            .arg("--config")
            .arg(config)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .status()
            .unwrap()
    };
    assert!(run(&cfg_path, &first, "1").success());
    let replay = dir.path().join("replay.json");
    assert!(run(&first, &replay, "6").success());
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&replay).unwrap());
    let text = std::fs::read_to_string(&first).unwrap();
    assert!(text.contains("\"confidence_gate\": 0.75"), "{text}");
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = leafroi()
        .args(["eval-detector", "--manifest", "missing.jsonl", "--predictions", "missing.jsonl"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("missing.jsonl"));

    let data = dir.path().join("d");
    assert!(leafroi().args(["gen-synthetic", "--count", "5", "--with-maps", "--out"]).arg(&data).status().unwrap().success());
    pnm::write_mask(&data.join("masks/scene_00001_disease.pgm"), &BinaryMask::zeros(3, 3)).unwrap();
    pnm::write_mask(&data.join("masks/scene_00001_healthy.pgm"), &BinaryMask::zeros(3, 3)).unwrap();
    let out = dir.path().join("r.csv");
    let partial = leafroi()
        .args(["eval-saliency", "--format", "csv", "--manifest"])
        .arg(data.join("manifest.jsonl"))
        .arg("--predictions")
        .arg(data.join("predictions.jsonl"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(partial.status.code(), Some(2));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.contains("images.failed,1"), "{csv}");
}

#[test]
fn cli_mask_tools() {
    let dir = tempfile::tempdir().unwrap();
    let scene = SceneSampler::default().scene_of_class(4, 0, ClassLabel::LateBlight).unwrap();
    let img = dir.path().join("leaf.ppm");
    pnm::write_ppm(&img, &scene.truth.image).unwrap();
    let out = dir.path().join("spots.pgm");
    let s = leafroi().args(["gt-mask", "--kind", "disease", "--image"]).arg(&img).arg("--out").arg(&out).status().unwrap();
    assert!(s.success());
    assert_eq!(pnm::read_mask(&out).unwrap(), scene.truth.disease_mask);

    let overlay = dir.path().join("sal.ppm");
    pnm::write_ppm(&overlay, &leafroi::datagen::render_saliency_overlay(&scene.truth.disease_mask)).unwrap();
    let bin = dir.path().join("bin.pgm");
    let s = leafroi().args(["binarize-saliency", "--map"]).arg(&overlay).arg("--out").arg(&bin).status().unwrap();
    assert!(s.success());
    assert_eq!(pnm::read_mask(&bin).unwrap(), scene.truth.disease_mask);
}
