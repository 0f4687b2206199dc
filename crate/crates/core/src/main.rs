use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use leafroi::datagen::{export_dataset, Background, DetectorNoise, ExportOptions, SceneSampler};
use leafroi::harness::{
    cross_test, evaluate, load_manifest, load_predictions, matrix_report, render_report, EvalConfig,
    PairedMatrixReport, ReportFormat, ReportKind, ToValue,
};
use leafroi::imaging::{refine_mask, threshold_ground_truth, MaskKind};
use leafroi::metrics::PrintedSummary;
use leafroi::pnm::{self, Raster};
use leafroi::saliency::{binarize_color_saliency, binarize_scalar_saliency};
use leafroi::{ConfusionMatrix, Error, NoDecisionPolicy};

#[derive(Parser, Debug)]
#[command(name = "leafroi", version, about = "Region-grounded leaf disease evaluation toolkit")]
struct Cli {
    /// JSON evaluation config (a previous JSON report also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive a ground-truth mask from a leaf image by hue band.
    GtMask {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Apply the configured (or default) open/close/small-blob clean-up.
        #[arg(long)]
        refine: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binarize a colour (PPM) or scalar (PGM) saliency map.
    BinarizeSaliency {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score saliency maps against ground-truth masks, per class.
    EvalSaliency(EvalArgs),
    /// Score ROI detections: box overlap plus gated image-level classification.
    EvalDetector(EvalArgs),
    /// Score attention maps and the supplied predicted labels.
    EvalAttention(EvalArgs),
    /// Evaluate on a testing set and on a second dataset, side by side.
    CrossTest {
        #[arg(long, value_enum)]
        kind: KindOfEval,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        cross_manifest: PathBuf,
        #[arg(long)]
        cross_predictions: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize confusion matrices given as CSV.
    MetricsFromCm {
        #[arg(long)]
        cm: PathBuf,
        #[arg(long)]
        cross_cm: Option<PathBuf>,
        /// Published "accuracy_pct,precision,recall,f" to check against.
        #[arg(long)]
        printed: Option<String>,
        #[arg(long)]
        cross_printed: Option<String>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset with simulated detector output.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        max_spots: usize,
        #[arg(long, value_enum, default_value_t = BackgroundArg::Dark)]
        background: BackgroundArg,
        #[arg(long, default_value_t = 0)]
        box_jitter: usize,
        #[arg(long, default_value_t = 0.0)]
        drop_rate: f64,
        #[arg(long, default_value_t = 0.0)]
        mislabel_rate: f64,
        #[arg(long, default_value_t = 1.0)]
        confidence_min: f64,
        #[arg(long, default_value_t = 1.0)]
        confidence_max: f64,
        #[arg(long, default_value_t = 0.0)]
        spurious_rate: f64,
        /// Also write saliency and attention maps plus predicted labels.
        #[arg(long)]
        with_maps: bool,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Disease,
    Healthy,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindOfEval {
    Saliency,
    Detector,
    Attention,
}

impl From<KindOfEval> for ReportKind {
    fn from(k: KindOfEval) -> Self {
        match k {
            KindOfEval::Saliency => ReportKind::Saliency,
            KindOfEval::Detector => ReportKind::Detector,
            KindOfEval::Attention => ReportKind::Attention,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    AsError,
    Exclude,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackgroundArg {
    Dark,
    Soil,
}

/// Raised when a report was written but some images failed.
#[derive(Debug)]
struct PartialFailure(usize);

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} image(s) failed; see the report's failures section", self.0)
    }
}

impl std::error::Error for PartialFailure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<PartialFailure>() => {
            eprintln!("warning: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn load_config(path: Option<&Path>) -> anyhow::Result<EvalConfig> {
    match path {
        Some(p) => Ok(EvalConfig::load(p)?),
        None => Ok(EvalConfig::default()),
    }
}

fn write_out(report: &dyn ToValue, format: ReportFormat, out: Option<&Path>) -> anyhow::Result<()> {
    let text = render_report(report, format);
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_printed(s: &str) -> anyhow::Result<PrintedSummary> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("--printed expects four numbers, got `{s}`"))?;
    let [accuracy_pct, precision, recall, f_measure] = parts[..] else {
        bail!("--printed expects four numbers (accuracy %, precision, recall, F), got {}", parts.len());
    };
    Ok(PrintedSummary {
        accuracy_pct,
        precision,
        recall,
        f_measure,
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.workers == 0 {
        return Err(Error::InvalidConfig("--workers must be at least 1".into()).into());
    }
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::GtMask {
            image,
            kind,
            refine,
            out,
        } => {
            let cfg = load_config(config_path)?;
            let img = pnm::read_ppm(&image)?;
            let kind = match kind {
                KindArg::Disease => MaskKind::DiseaseSpot,
                KindArg::Healthy => MaskKind::HealthyLeaf,
            };
            let mut mask = threshold_ground_truth(&img, kind, &cfg.threshold);
            if refine {
                mask = refine_mask(&mask, &cfg.refine.unwrap_or_default())?;
            }
            pnm::write_mask(&out, &mask)?;
        }
        Command::BinarizeSaliency { map, out } => {
            let cfg = load_config(config_path)?;
            let mask = match pnm::read_raster(&map)? {
                Raster::Rgb(img) => binarize_color_saliency(&img, &cfg.saliency),
                Raster::Gray(img) => binarize_scalar_saliency(&img, cfg.saliency.scalar_threshold),
            };
            pnm::write_mask(&out, &mask)?;
        }
        Command::EvalSaliency(a) => run_eval(ReportKind::Saliency, a, config_path, cli.workers, cli.format)?,
        Command::EvalDetector(a) => run_eval(ReportKind::Detector, a, config_path, cli.workers, cli.format)?,
        Command::EvalAttention(a) => run_eval(ReportKind::Attention, a, config_path, cli.workers, cli.format)?,
        Command::CrossTest {
            kind,
            manifest,
            predictions,
            cross_manifest,
            cross_predictions,
            out,
        } => {
            let cfg = load_config(config_path)?;
            let m_a = load_manifest(&manifest)?;
            let p_a = load_predictions(&predictions, &m_a)?;
            let m_b = load_manifest(&cross_manifest)?;
            let p_b = load_predictions(&cross_predictions, &m_b)?;
            let testing = evaluate(kind.into(), &m_a, &p_a, &cfg, cli.workers)?;
            let report = cross_test(&m_b, &p_b, &cfg, &testing, cli.workers)?;
            write_out(&report, cli.format, out.as_deref())?;
            let failed = report.testing.failures.len() + report.cross_testing.failures.len();
            if failed > 0 {
                return Err(PartialFailure(failed).into());
            }
        }
        Command::MetricsFromCm {
            cm,
            cross_cm,
            printed,
            cross_printed,
            policy,
            out,
        } => {
            let policy = match policy {
                Some(PolicyArg::AsError) => NoDecisionPolicy::AsError,
                Some(PolicyArg::Exclude) => NoDecisionPolicy::Exclude,
                None => load_config(config_path)?.headline_policy,
            };
            let printed = printed.as_deref().map(parse_printed).transpose()?;
            let testing = matrix_report(
                &cm.display().to_string(),
                ConfusionMatrix::load_csv(&cm)?,
                policy,
                printed.as_ref(),
            )?;
            match cross_cm {
                None => write_out(&testing, cli.format, out.as_deref())?,
                Some(cross) => {
                    let cross_printed = cross_printed.as_deref().map(parse_printed).transpose()?;
                    let cross_testing = matrix_report(
                        &cross.display().to_string(),
                        ConfusionMatrix::load_csv(&cross)?,
                        policy,
                        cross_printed.as_ref(),
                    )?;
                    let paired = PairedMatrixReport { testing, cross_testing };
                    write_out(&paired, cli.format, out.as_deref())?;
                }
            }
        }
        Command::GenSynthetic {
            out,
            count,
            width,
            height,
            max_spots,
            background,
            box_jitter,
            drop_rate,
            mislabel_rate,
            confidence_min,
            confidence_max,
            spurious_rate,
            with_maps,
        } => {
            let opts = ExportOptions {
                sampler: SceneSampler {
                    width,
                    height,
                    max_spots,
                    background: match background {
                        BackgroundArg::Dark => Background::Dark,
                        BackgroundArg::Soil => Background::Soil,
                    },
                },
                noise: DetectorNoise {
                    box_jitter,
                    drop_rate,
                    mislabel_rate,
                    confidence_range: (confidence_min, confidence_max),
                    spurious_rate,
                },
                with_maps,
            };
            let summary = export_dataset(&out, count, cli.seed, &opts)?;
            eprintln!(
                "wrote {} scenes (EB {}, LB {}, HL {}) to {}",
                summary.scenes,
                summary.class_counts[0],
                summary.class_counts[1],
                summary.class_counts[2],
                out.display()
            );
        }
    }
    Ok(())
}

fn run_eval(
    kind: ReportKind,
    args: EvalArgs,
    config: Option<&Path>,
    workers: usize,
    format: ReportFormat,
) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let manifest = load_manifest(&args.manifest)?;
    let predictions = load_predictions(&args.predictions, &manifest)?;
    let report = evaluate(kind, &manifest, &predictions, &cfg, workers)?;
    write_out(&report, format, args.out.as_deref())?;
    if !report.failures.is_empty() {
        return Err(PartialFailure(report.failures.len()).into());
    }
    Ok(())
}
