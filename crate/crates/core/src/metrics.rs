//! Three-class confusion matrices and their summary statistics.
//!
//! Rows are actual classes, columns predicted classes, both in
//! `EB, LB, HL` order. Images for which no class decision could be made are
//! tracked separately per actual class.

use std::fmt;
use std::io::{Read, Write};
use std::ops::AddAssign;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::{ClassLabel, ImageDecision};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
    pub no_decision: [u64; 3],
}

/// How images without a class decision enter the summary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoDecisionPolicy {
    /// Counted as misclassified: added to the accuracy and recall denominators.
    #[default]
    AsError,
    /// Dropped from every denominator.
    Exclude,
}

impl fmt::Display for NoDecisionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoDecisionPolicy::AsError => "as_error",
            NoDecisionPolicy::Exclude => "exclude",
        })
    }
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        Self {
            counts,
            no_decision: [0; 3],
        }
    }

    pub fn accumulate(&mut self, actual: ClassLabel, decision: ImageDecision) {
        match decision {
            ImageDecision::Decided(pred) => self.counts[actual.index()][pred.index()] += 1,
            ImageDecision::NoDecision => self.no_decision[actual.index()] += 1,
        }
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|k| self.counts[k][k]).sum()
    }

    /// Number of decided images.
    pub fn decided(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn undecided(&self) -> u64 {
        self.no_decision.iter().sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|row| row[k]).sum()
    }

    /// Reads the CSV form: three rows of three integers (EB, LB, HL order),
    /// optionally followed by a fourth row of per-class no-decision counts.
    pub fn read_csv<R: Read>(reader: R, source: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(reader);
        let parse_err = |line: usize, message: String| Error::Parse {
            file: source.to_path_buf(),
            line,
            message,
        };
        let mut rows: Vec<[u64; 3]> = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = record
                .as_ref()
                .ok()
                .and_then(|r| r.position())
                .map_or(i + 1, |p| p.line() as usize);
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            if record.len() != 3 {
                return Err(parse_err(line, format!("expected 3 values, found {}", record.len())));
            }
            let mut row = [0u64; 3];
            for (slot, field) in row.iter_mut().zip(record.iter()) {
                *slot = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("`{field}` is not a non-negative integer")))?;
            }
            rows.push(row);
        }
        match rows.len() {
            3 | 4 => Ok(Self {
                counts: [rows[0], rows[1], rows[2]],
                no_decision: rows.get(3).copied().unwrap_or([0; 3]),
            }),
            n => Err(parse_err(n, format!("expected 3 or 4 rows, found {n}"))),
        }
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, path)
    }

    /// Writes the CSV form; the no-decision row is emitted only when non-zero.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let mut rows: Vec<[u64; 3]> = self.counts.to_vec();
        if self.undecided() > 0 {
            rows.push(self.no_decision);
        }
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()
    }
}

impl AddAssign<&ConfusionMatrix> for ConfusionMatrix {
    fn add_assign(&mut self, other: &ConfusionMatrix) {
        for i in 0..3 {
            for j in 0..3 {
                self.counts[i][j] += other.counts[i][j];
            }
            self.no_decision[i] += other.no_decision[i];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    pub policy: NoDecisionPolicy,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    /// Mean of the per-class F1 scores.
    pub macro_f1_mean: f64,
    /// Harmonic mean of `macro_precision` and `macro_recall`.
    pub f1_of_macros: f64,
    pub per_class: [ClassMetrics; 3],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn summarize(cm: &ConfusionMatrix, policy: NoDecisionPolicy) -> Result<SummaryMetrics> {
    let extra = |k: usize| match policy {
        NoDecisionPolicy::AsError => cm.no_decision[k],
        NoDecisionPolicy::Exclude => 0,
    };
    let total = cm.decided() + (0..3).map(extra).sum::<u64>();
    if total == 0 {
        return Err(Error::Empty(format!("confusion matrix has no images under policy {policy}")));
    }
    let per_class: [ClassMetrics; 3] = std::array::from_fn(|k| {
        let precision = ratio(cm.counts[k][k], cm.col_sum(k));
        let recall = ratio(cm.counts[k][k], cm.row_sum(k) + extra(k));
        ClassMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    });
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    let macro_precision = mean(|c| c.precision);
    let macro_recall = mean(|c| c.recall);
    Ok(SummaryMetrics {
        policy,
        accuracy: ratio(cm.trace(), total),
        macro_precision,
        macro_recall,
        macro_f1_mean: mean(|c| c.f1),
        f1_of_macros: harmonic(macro_precision, macro_recall),
        per_class,
    })
}

/// A published "accuracy (precision, recall, F)" quadruple. Accuracy is a
/// percentage; the other three are ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrintedSummary {
    pub accuracy_pct: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl SummaryMetrics {
    /// Compares against published values and describes every disagreement
    /// larger than `tol` (in ratio units). The F value is accepted if it
    /// matches either F convention.
    pub fn discrepancies(&self, label: &str, printed: &PrintedSummary, tol: f64) -> Vec<String> {
        let mut flags = Vec::new();
        let mut check = |what: &str, derived: f64, shown: f64| {
            if (derived - shown).abs() > tol {
                flags.push(format!(
                    "{label}: {what} derived from the confusion matrix is {derived:.4}, published value is {shown:.4}"
                ));
            }
        };
        check("accuracy", self.accuracy, printed.accuracy_pct / 100.0);
        check("macro precision", self.macro_precision, printed.precision);
        check("macro recall", self.macro_recall, printed.recall);
        let f_ok = [self.macro_f1_mean, self.f1_of_macros]
            .iter()
            .any(|f| (f - printed.f_measure).abs() <= tol);
        if !f_ok {
            flags.push(format!(
                "{label}: published F-measure {:.4} matches neither the mean of per-class F1 ({:.4}) nor the harmonic mean of macro precision and recall ({:.4})",
                printed.f_measure, self.macro_f1_mean, self.f1_of_macros
            ));
        }
        flags
    }
}
