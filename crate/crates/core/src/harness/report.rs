//! Report structures and their deterministic CSV/JSON serialisation.
//!
//! Reports are first lowered to a [`Value`] tree whose maps are ordered by
//! key. Ratios are printed with 4 decimals, percentages with 2, and config
//! echoes with the shortest representation that round-trips, so identical
//! reports always produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::EvalConfig;
use crate::detection::ClassLabel;
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, NoDecisionPolicy, SummaryMetrics};
use crate::saliency::{OverlapScores, SaliencyReport};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(u64),
    /// Printed with 4 decimals.
    Ratio(f64),
    /// Printed with 2 decimals.
    Percent(f64),
    /// Printed with the shortest round-tripping representation.
    Real(f64),
    Bool(bool),
    Text(String),
    Null,
    List(Vec<Value>),
    Map(BTreeMap<String, Value>),
}

impl Value {
    fn map() -> Self {
        Value::Map(BTreeMap::new())
    }

    fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        if let Value::Map(m) = &mut self {
            m.insert(key.to_string(), v.into());
        }
        self
    }

    fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    fn texts<S: ToString>(items: impl IntoIterator<Item = S>) -> Self {
        Value::List(items.into_iter().map(|s| Value::Text(s.to_string())).collect())
    }

    fn from_json(v: &serde_json::Value) -> Self {
        match v {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_u64() {
                Some(u) => Value::Int(u),
                None => Value::Real(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Array(a) => Value::List(a.iter().map(Value::from_json).collect()),
            serde_json::Value::Object(o) => Value::Map(o.iter().map(|(k, v)| (k.clone(), Value::from_json(v))).collect()),
        }
    }

    fn scalar_text(&self) -> Option<String> {
        let num = |x: f64, s: String| if x.is_finite() { s } else { "null".to_string() };
        Some(match self {
            Value::Int(i) => i.to_string(),
            Value::Ratio(x) => num(*x, format!("{x:.4}")),
            Value::Percent(x) => num(*x, format!("{x:.2}")),
            Value::Real(x) => num(*x, format!("{x}")),
            Value::Bool(b) => b.to_string(),
            Value::Null => "null".to_string(),
            Value::Text(s) => s.clone(),
            Value::List(_) | Value::Map(_) => return None,
        })
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.write_json(&mut out, 0);
        out.push('\n');
        out
    }

    fn write_json(&self, out: &mut String, indent: usize) {
        let pad = |n: usize| "  ".repeat(n);
        match self {
            Value::Text(s) => out.push_str(&serde_json::to_string(s).expect("string serialises")),
            Value::List(items) if items.is_empty() => out.push_str("[]"),
            Value::Map(m) if m.is_empty() => out.push_str("{}"),
            Value::List(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    item.write_json(out, indent + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Value::Map(m) => {
                out.push_str("{\n");
                for (i, (k, v)) in m.iter().enumerate() {
                    let _ = write!(out, "{}{}: ", pad(indent + 1), serde_json::to_string(k).expect("key serialises"));
                    v.write_json(out, indent + 1);
                    out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
            scalar => out.push_str(&scalar.scalar_text().expect("scalar")),
        }
    }

    /// Dotted-path `(key, value)` pairs in key order. Empty containers are omitted.
    pub fn flatten(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        self.flatten_into("", &mut rows);
        rows
    }

    fn flatten_into(&self, prefix: &str, rows: &mut Vec<(String, String)>) {
        let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
        match self {
            Value::Map(m) => m.iter().for_each(|(k, v)| v.flatten_into(&key(k), rows)),
            Value::List(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| v.flatten_into(&key(&i.to_string()), rows)),
            scalar => rows.push((prefix.to_string(), scalar.scalar_text().expect("scalar"))),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in self.flatten() {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as u64)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(v: Option<T>) -> Self {
        v.map_or(Value::Null, Into::into)
    }
}

/// Anything that can be emitted as a report.
pub trait ToValue {
    fn to_value(&self) -> Value;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn render_report(report: &dyn ToValue, format: ReportFormat) -> String {
    let v = report.to_value();
    match format {
        ReportFormat::Csv => v.to_csv(),
        ReportFormat::Json => v.to_json(),
    }
}

pub fn emit_report(report: &dyn ToValue, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Saliency,
    Detector,
    Attention,
}

impl ReportKind {
    pub fn name(self) -> &'static str {
        match self {
            ReportKind::Saliency => "saliency",
            ReportKind::Detector => "detector",
            ReportKind::Attention => "attention",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageFailure {
    pub image_id: String,
    pub reason: String,
}

/// Mean of per-image overlap ratios, plus the pooled pixel counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapSummary {
    pub images: usize,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub pooled_tp: u64,
    pub pooled_fp: u64,
    pub pooled_fn: u64,
}

impl OverlapSummary {
    /// `scores` must already be in a canonical (image-id) order.
    pub fn from_scores(scores: &[OverlapScores]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        Some(Self {
            images: scores.len(),
            mean_precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
            mean_recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
            pooled_tp: scores.iter().map(|s| s.tp).sum(),
            pooled_fp: scores.iter().map(|s| s.fp).sum(),
            pooled_fn: scores.iter().map(|s| s.fn_).sum(),
        })
    }
}

/// Confusion matrix with summaries under both no-decision policies.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationSection {
    pub confusion: ConfusionMatrix,
    pub headline_policy: NoDecisionPolicy,
    /// `None` when the matrix has no images under that policy.
    pub as_error: Option<SummaryMetrics>,
    pub exclude: Option<SummaryMetrics>,
}

impl ClassificationSection {
    pub fn new(confusion: ConfusionMatrix, headline_policy: NoDecisionPolicy) -> Self {
        use crate::metrics::summarize;
        Self {
            as_error: summarize(&confusion, NoDecisionPolicy::AsError).ok(),
            exclude: summarize(&confusion, NoDecisionPolicy::Exclude).ok(),
            confusion,
            headline_policy,
        }
    }

    pub fn headline(&self) -> Option<&SummaryMetrics> {
        match self.headline_policy {
            NoDecisionPolicy::AsError => self.as_error.as_ref(),
            NoDecisionPolicy::Exclude => self.exclude.as_ref(),
        }
    }

    /// Flags for policies whose summary could not be computed.
    pub fn flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.as_error.is_none() {
            flags.push("classification summary unavailable: no images were evaluated".to_string());
        } else if self.exclude.is_none() {
            flags.push("classification summary under exclude policy unavailable: every image ended with no decision".to_string());
        }
        flags
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttentionDiagnostics {
    pub healthy_images: usize,
    /// Healthy images whose attention map still contains a region.
    pub spurious_attention: usize,
    pub disease_images: usize,
    /// Disease images whose attention map contains no region.
    pub disease_without_attention: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub kind: ReportKind,
    pub dataset_name: String,
    pub config: EvalConfig,
    pub images_total: usize,
    pub failures: Vec<ImageFailure>,
    pub saliency: Option<SaliencyReport>,
    pub detector_overlap: Option<OverlapSummary>,
    pub classification: Option<ClassificationSection>,
    pub attention: Option<AttentionDiagnostics>,
    pub discrepancy_flags: Vec<String>,
    pub interpretation: Vec<String>,
}

impl EvaluationReport {
    pub fn images_scored(&self) -> usize {
        self.images_total - self.failures.len()
    }
}

/// Testing results paired with a second dataset's results.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossTestReport {
    pub testing: EvaluationReport,
    pub cross_testing: EvaluationReport,
}

/// Summary of a confusion matrix supplied directly rather than computed.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixReport {
    pub source: String,
    pub classification: ClassificationSection,
    pub discrepancy_flags: Vec<String>,
}

/// Testing and cross-testing matrices side by side.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedMatrixReport {
    pub testing: MatrixReport,
    pub cross_testing: MatrixReport,
}

pub const NOTE_PER_IMAGE: &str = "per-class overlap values are unweighted means of per-image ratios";
pub const NOTE_ROW_AVERAGE: &str = "row averages are unweighted means over the classes present";
pub const NOTE_F_CONVENTIONS: &str =
    "macro_f1_mean is the mean of per-class F1; f1_of_macros is the harmonic mean of macro precision and macro recall";
pub const NOTE_DETECTOR_OVERLAP: &str =
    "detector overlap rasterises the union of gated predicted boxes and of ground-truth boxes per image, then averages over images";
pub const NOTE_NO_DECISION: &str =
    "as_error counts no-decision images in the accuracy and recall denominators; exclude drops them";

fn pct_row(s: &crate::saliency::ClassSaliency) -> Value {
    Value::map()
        .with("precision_pct", Value::Percent(s.precision_pct))
        .with("recall_pct", Value::Percent(s.recall_pct))
        .with("image_count", s.image_count)
}

impl ToValue for SaliencyReport {
    fn to_value(&self) -> Value {
        let per_class = self
            .per_class
            .iter()
            .fold(Value::map(), |m, (c, s)| m.with(c.code(), pct_row(s)));
        Value::map()
            .with("per_class", per_class)
            .with(
                "row_average",
                Value::map()
                    .with("precision_pct", Value::Percent(self.row_average.precision_pct))
                    .with("recall_pct", Value::Percent(self.row_average.recall_pct)),
            )
            .with("missing_classes", Value::texts(self.missing_classes.iter().map(|c| c.code())))
    }
}

impl ToValue for OverlapSummary {
    fn to_value(&self) -> Value {
        Value::map()
            .with("images", self.images)
            .with("mean_precision", Value::Ratio(self.mean_precision))
            .with("mean_recall", Value::Ratio(self.mean_recall))
            .with(
                "pooled",
                Value::map()
                    .with("tp", self.pooled_tp)
                    .with("fp", self.pooled_fp)
                    .with("fn", self.pooled_fn),
            )
    }
}

fn headline_fields(v: Value, s: &SummaryMetrics) -> Value {
    v.with("accuracy", Value::Ratio(s.accuracy))
        .with("macro_precision", Value::Ratio(s.macro_precision))
        .with("macro_recall", Value::Ratio(s.macro_recall))
        .with("macro_f1_mean", Value::Ratio(s.macro_f1_mean))
        .with("f1_of_macros", Value::Ratio(s.f1_of_macros))
}

impl ToValue for SummaryMetrics {
    fn to_value(&self) -> Value {
        let per_class = ClassLabel::ALL.iter().zip(&self.per_class).fold(Value::map(), |m, (c, k)| {
            m.with(
                c.code(),
                Value::map()
                    .with("precision", Value::Ratio(k.precision))
                    .with("recall", Value::Ratio(k.recall))
                    .with("f1", Value::Ratio(k.f1)),
            )
        });
        headline_fields(Value::map(), self).with("per_class", per_class)
    }
}

impl ToValue for ClassificationSection {
    fn to_value(&self) -> Value {
        let rows = Value::List(
            self.confusion
                .counts
                .iter()
                .map(|r| Value::List(r.iter().map(|&c| Value::Int(c)).collect()))
                .collect(),
        );
        let summary = |s: &Option<SummaryMetrics>| s.as_ref().map_or(Value::Null, ToValue::to_value);
        Value::map()
            .with("class_order", "EB,LB,HL")
            .with("confusion_matrix", rows)
            .with("no_decision", Value::List(self.confusion.no_decision.iter().map(|&c| Value::Int(c)).collect()))
            .with("headline_policy", self.headline_policy.to_string())
            .with("summary_as_error", summary(&self.as_error))
            .with("summary_exclude", summary(&self.exclude))
    }
}

impl ToValue for AttentionDiagnostics {
    fn to_value(&self) -> Value {
        Value::map()
            .with("healthy_images", self.healthy_images)
            .with("spurious_attention", self.spurious_attention)
            .with("disease_images", self.disease_images)
            .with("disease_without_attention", self.disease_without_attention)
    }
}

fn config_value(cfg: &EvalConfig) -> Value {
    Value::from_json(&serde_json::to_value(cfg).expect("config serialises"))
}

impl ToValue for EvaluationReport {
    fn to_value(&self) -> Value {
        let failures = Value::List(
            self.failures
                .iter()
                .map(|f| Value::map().with("image_id", f.image_id.as_str()).with("reason", f.reason.as_str()))
                .collect(),
        );
        let mut v = Value::map()
            .with("report_kind", self.kind.name())
            .with("dataset_name", self.dataset_name.as_str())
            .with("config", config_value(&self.config))
            .with(
                "images",
                Value::map()
                    .with("total", self.images_total)
                    .with("scored", self.images_scored())
                    .with("failed", self.failures.len()),
            )
            .with("failures", failures)
            .with("discrepancy_flags", Value::texts(&self.discrepancy_flags))
            .with("interpretation", Value::texts(&self.interpretation));
        if let Some(s) = &self.saliency {
            v = v
                .with("saliency", s.to_value())
                .with("avg_precision_pct", Value::Percent(s.row_average.precision_pct))
                .with("avg_recall_pct", Value::Percent(s.row_average.recall_pct));
        }
        if let Some(o) = &self.detector_overlap {
            v = v
                .with("detector_overlap", o.to_value())
                .with("overlap_precision", Value::Ratio(o.mean_precision))
                .with("overlap_recall", Value::Ratio(o.mean_recall));
        }
        if let Some(c) = &self.classification {
            v = v.with("classification", c.to_value());
            if let Some(h) = c.headline() {
                v = headline_fields(v, h);
            }
        }
        if let Some(a) = &self.attention {
            v = v.with("attention", a.to_value());
        }
        v
    }
}

impl ToValue for CrossTestReport {
    fn to_value(&self) -> Value {
        let flags: Vec<&String> = self
            .testing
            .discrepancy_flags
            .iter()
            .chain(&self.cross_testing.discrepancy_flags)
            .collect();
        Value::map()
            .with("report_kind", Value::text(format!("cross_test_{}", self.testing.kind.name())))
            .with("testing", self.testing.to_value())
            .with("cross_testing", self.cross_testing.to_value())
            .with("discrepancy_flags", Value::texts(flags))
    }
}

impl ToValue for MatrixReport {
    fn to_value(&self) -> Value {
        let mut v = Value::map()
            .with("report_kind", "confusion_matrix")
            .with("source", self.source.as_str())
            .with("classification", self.classification.to_value())
            .with("discrepancy_flags", Value::texts(&self.discrepancy_flags))
            .with("interpretation", Value::texts([NOTE_F_CONVENTIONS, NOTE_NO_DECISION]));
        if let Some(h) = self.classification.headline() {
            v = headline_fields(v, h);
        }
        v
    }
}

impl ToValue for PairedMatrixReport {
    fn to_value(&self) -> Value {
        let flags: Vec<&String> = self
            .testing
            .discrepancy_flags
            .iter()
            .chain(&self.cross_testing.discrepancy_flags)
            .collect();
        Value::map()
            .with("report_kind", "confusion_matrix_pair")
            .with("testing", self.testing.to_value())
            .with("cross_testing", self.cross_testing.to_value())
            .with("discrepancy_flags", Value::texts(flags))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        let v = Value::map()
            .with("r", Value::Ratio(0.969488))
            .with("p", Value::Percent(67.63333))
            .with("x", Value::Real(0.15))
            .with("n", Value::Real(f64::NAN));
        assert_eq!(v.to_csv(), "key,value\nn,null\np,67.63\nr,0.9695\nx,0.15\n");
        assert_eq!(v.to_json(), "{\n  \"n\": null,\n  \"p\": 67.63,\n  \"r\": 0.9695,\n  \"x\": 0.15\n}\n");
    }

    #[test]
    fn nested_keys_flatten_with_dots() {
        let v = Value::map()
            .with("b", Value::List(vec![Value::Int(1), Value::Int(2)]))
            .with("a", Value::map().with("z", "t,u"))
            .with("empty", Value::List(vec![]));
        assert_eq!(v.to_csv(), "key,value\na.z,\"t,u\"\nb.0,1\nb.1,2\n");
        assert!(v.to_json().contains("\"empty\": []"));
    }

    #[test]
    fn config_echo_keeps_full_precision() {
        let cfg = EvalConfig {
            confidence_gate: 0.123456789,
            ..Default::default()
        };
        let json = config_value(&cfg).to_json();
        let back: EvalConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
