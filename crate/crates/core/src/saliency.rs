//! Saliency and attention map binarisation, pixel-overlap scoring against
//! ground-truth masks, and per-class aggregation.
//!
//! Overlap precision is `TP / (TP + FP)` and overlap recall is
//! `TP / (TP + FN)`, where TP counts pixels set in both the ground truth and
//! the binarised map, FP pixels set only in the map and FN pixels set only in
//! the ground truth. Empty denominators follow these rules:
//!
//! * both masks empty: precision = recall = 1;
//! * map empty, ground truth non-empty: precision = 0 (and recall = 0);
//! * ground truth empty, map non-empty: recall = 0 (and precision = 0).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::detection::ClassLabel;
use crate::error::{Error, Result};
use crate::imaging::{connected_components, BinaryMask, Connectivity, GrayImage, Hsv, RgbImage};

/// Colour band for "hot" regions of a colour-coded saliency overlay, plus the
/// cut level for scalar attention rasters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaliencyBandConfig {
    pub hue_max: f64,
    pub min_saturation: f64,
    pub min_value: f64,
    pub scalar_threshold: u8,
}

impl Default for SaliencyBandConfig {
    fn default() -> Self {
        Self {
            hue_max: 0.125,
            min_saturation: 0.5,
            min_value: 0.5,
            scalar_threshold: 128,
        }
    }
}

impl SaliencyBandConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hue_max > 0.0 && self.hue_max < 1.0) {
            return Err(Error::InvalidConfig(format!("hue_max = {} is outside (0, 1)", self.hue_max)));
        }
        for (name, v) in [("min_saturation", self.min_saturation), ("min_value", self.min_value)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Red-to-orange band: `h <= hue_max` with saturation and value guards. The
/// band starts at hue 0 and does not wrap.
pub fn binarize_color_saliency(map: &RgbImage, cfg: &SaliencyBandConfig) -> BinaryMask {
    let bits = map
        .pixels()
        .iter()
        .map(|&p| {
            let px = Hsv::from_rgb(p);
            px.h <= cfg.hue_max && px.s >= cfg.min_saturation && px.v >= cfg.min_value
        })
        .collect();
    BinaryMask::new(map.width(), map.height(), bits).expect("dimensions carried over from a valid raster")
}

/// Foreground iff `value >= threshold`.
pub fn binarize_scalar_saliency(map: &GrayImage, threshold: u8) -> BinaryMask {
    let bits = map.values().iter().map(|&v| v >= threshold).collect();
    BinaryMask::new(map.width(), map.height(), bits).expect("dimensions carried over from a valid raster")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapScores {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
}

impl OverlapScores {
    /// Derives the ratios from raw counts using the degenerate-case rules.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let gt = tp + fn_;
        let sm = tp + fp;
        let (precision, recall) = if gt == 0 && sm == 0 {
            (1.0, 1.0)
        } else {
            let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
            (ratio(tp, sm), ratio(tp, gt))
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
        }
    }
}

pub fn overlap_scores(gt: &BinaryMask, sm: &BinaryMask) -> Result<OverlapScores> {
    if gt.dims() != sm.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: sm.dims(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&g, &s) in gt.bits().iter().zip(sm.bits()) {
        match (g, s) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(OverlapScores::from_counts(tp, fp, fn_))
}

/// True iff some 8-connected component reaches `min_area` pixels.
pub fn attention_present(mask: &BinaryMask, min_area: usize) -> bool {
    connected_components(mask, Connectivity::Eight)
        .component_areas()
        .iter()
        .any(|&a| a >= min_area.max(1))
}

/// Mean overlap for one class, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSaliency {
    pub precision_pct: f64,
    pub recall_pct: f64,
    /// `None` when the row was built from already-aggregated means.
    pub image_count: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowAverage {
    pub precision_pct: f64,
    pub recall_pct: f64,
}

/// One dataset row: per-class means plus their unweighted average.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaliencyReport {
    pub per_class: BTreeMap<ClassLabel, ClassSaliency>,
    pub row_average: RowAverage,
    /// Classes with no scored images; they are left out of `row_average`.
    pub missing_classes: Vec<ClassLabel>,
}

// Sorting before summing makes the mean independent of input order.
fn sorted_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-class means of per-image ratios, then the unweighted mean over the
/// classes that have at least one image.
pub fn aggregate_saliency(scores: &[(ClassLabel, OverlapScores)]) -> Result<SaliencyReport> {
    if scores.is_empty() {
        return Err(Error::Empty("no saliency scores to aggregate".into()));
    }
    let mut per_class = BTreeMap::new();
    for class in ClassLabel::ALL {
        let (p, r): (Vec<f64>, Vec<f64>) = scores
            .iter()
            .filter(|(c, _)| *c == class)
            .map(|(_, s)| (s.precision, s.recall))
            .unzip();
        if p.is_empty() {
            continue;
        }
        let n = p.len();
        per_class.insert(
            class,
            ClassSaliency {
                precision_pct: 100.0 * sorted_mean(p),
                recall_pct: 100.0 * sorted_mean(r),
                image_count: Some(n),
            },
        );
    }
    Ok(SaliencyReport::from_per_class(per_class))
}

impl SaliencyReport {
    /// Row from per-class mean percentages that were aggregated elsewhere.
    pub fn from_class_means(means: &[(ClassLabel, f64, f64)]) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::Empty("no class means".into()));
        }
        let mut per_class = BTreeMap::new();
        for &(class, precision_pct, recall_pct) in means {
            let entry = ClassSaliency {
                precision_pct,
                recall_pct,
                image_count: None,
            };
            if per_class.insert(class, entry).is_some() {
                return Err(Error::InvalidConfig(format!("class {class} listed twice")));
            }
        }
        Ok(Self::from_per_class(per_class))
    }

    fn from_per_class(per_class: BTreeMap<ClassLabel, ClassSaliency>) -> Self {
        let row_average = RowAverage {
            precision_pct: sorted_mean(per_class.values().map(|c| c.precision_pct).collect()),
            recall_pct: sorted_mean(per_class.values().map(|c| c.recall_pct).collect()),
        };
        let missing_classes = ClassLabel::ALL.into_iter().filter(|c| !per_class.contains_key(c)).collect();
        Self {
            per_class,
            row_average,
            missing_classes,
        }
    }

    /// Flags every row-average component that differs from a published
    /// value by more than `tol` percentage points.
    pub fn check_row_average(&self, row: &str, printed: RowAverage, tol: f64) -> Vec<String> {
        let mut flags = Vec::new();
        for (what, derived, shown) in [
            ("precision", self.row_average.precision_pct, printed.precision_pct),
            ("recall", self.row_average.recall_pct, printed.recall_pct),
        ] {
            if (derived - shown).abs() > tol {
                flags.push(format!(
                    "{row}: average {what} derived from per-class entries is {derived:.2}, published value is {shown:.2}"
                ));
            }
        }
        flags
    }
}

/// Unweighted mean of several rows' averages.
pub fn overall_average(rows: &[SaliencyReport]) -> Result<RowAverage> {
    if rows.is_empty() {
        return Err(Error::Empty("no saliency rows".into()));
    }
    Ok(RowAverage {
        precision_pct: sorted_mean(rows.iter().map(|r| r.row_average.precision_pct).collect()),
        recall_pct: sorted_mean(rows.iter().map(|r| r.row_average.recall_pct).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    #[test]
    fn color_band() {
        let cfg = SaliencyBandConfig::default();
        assert!(binarize_color_saliency(&RgbImage::filled(3, 3, [0, 0, 255]), &cfg).is_empty());
        assert_eq!(binarize_color_saliency(&RgbImage::filled(3, 3, [255, 0, 0]), &cfg), BinaryMask::ones(3, 3));
        let half = RgbImage::from_fn(6, 2, |x, _| if x < 3 { [255, 0, 0] } else { [0, 255, 0] });
        let expected = BinaryMask::from_fn(6, 2, |x, _| x < 3);
        assert_eq!(binarize_color_saliency(&half, &cfg), expected);
    }

    #[test]
    fn orange_in_yellow_out() {
        let cfg = SaliencyBandConfig::default();
        // Orange (255,128,0) has hue ~0.084; yellow has hue 1/6.
        assert!(binarize_color_saliency(&RgbImage::filled(1, 1, [255, 128, 0]), &cfg).get(0, 0));
        assert!(!binarize_color_saliency(&RgbImage::filled(1, 1, [255, 255, 0]), &cfg).get(0, 0));
        // Dark red fails the value guard.
        assert!(!binarize_color_saliency(&RgbImage::filled(1, 1, [100, 0, 0]), &cfg).get(0, 0));
    }

    #[test]
    fn scalar_threshold_is_inclusive() {
        assert!(binarize_scalar_saliency(&GrayImage::filled(4, 4, 0), 128).is_empty());
        assert_eq!(binarize_scalar_saliency(&GrayImage::filled(4, 4, 255), 128), BinaryMask::ones(4, 4));
        let g = GrayImage::new(3, 1, vec![100, 128, 200]).unwrap();
        assert_eq!(binarize_scalar_saliency(&g, 128).bits(), &[false, true, true]);
    }

    #[test]
    fn overlap_worked_example() {
        // gt: 4 pixels, sm: 6 pixels, intersection 3.
        let gt = BinaryMask::from_fn(4, 4, |_x, y| y == 0);
        let sm = BinaryMask::from_fn(4, 4, |x, y| (y == 0 && x >= 1) || (y == 1 && x < 3));
        let s = overlap_scores(&gt, &sm).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (3, 3, 1));
        assert_eq!((s.precision, s.recall), (0.5, 0.75));
    }

    #[test]
    fn overlap_identity_and_degenerates() {
        let m = BinaryMask::from_fn(5, 5, |x, y| x == y);
        let s = overlap_scores(&m, &m).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0));

        let z = BinaryMask::zeros(5, 5);
        let s = overlap_scores(&z, &z).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0));
        let s = overlap_scores(&m, &z).unwrap();
        assert_eq!((s.precision, s.recall), (0.0, 0.0));
        let s = overlap_scores(&z, &m).unwrap();
        assert_eq!((s.precision, s.recall), (0.0, 0.0));
    }

    #[test]
    fn overlap_rejects_size_mismatch() {
        let err = overlap_scores(&BinaryMask::zeros(4, 4), &BinaryMask::zeros(4, 5)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn attention_presence_boundary() {
        assert!(!attention_present(&BinaryMask::zeros(8, 8), 1));
        let m = BinaryMask::from_fn(8, 8, |x, y| y == 2 && (1..6).contains(&x));
        assert!(attention_present(&m, 5));
        assert!(!attention_present(&m, 6));
    }

    #[test]
    fn aggregation_single_image() {
        let s = OverlapScores::from_counts(5, 0, 0);
        let report = aggregate_saliency(&[(EarlyBlight, s)]).unwrap();
        assert_eq!(report.per_class[&EarlyBlight].precision_pct, 100.0);
        assert_eq!(report.row_average, RowAverage { precision_pct: 100.0, recall_pct: 100.0 });
        assert_eq!(report.missing_classes, vec![LateBlight, HealthyLeaves]);
    }

    #[test]
    fn aggregation_averages_per_image_ratios() {
        let scores = [
            (EarlyBlight, OverlapScores::from_counts(1, 1, 0)),
            (EarlyBlight, OverlapScores::from_counts(90, 10, 0)),
            (HealthyLeaves, OverlapScores::from_counts(1, 0, 3)),
        ];
        let r = aggregate_saliency(&scores).unwrap();
        assert!((r.per_class[&EarlyBlight].precision_pct - 70.0).abs() < 1e-12);
        assert_eq!(r.per_class[&EarlyBlight].image_count, Some(2));
        assert!((r.per_class[&HealthyLeaves].recall_pct - 25.0).abs() < 1e-12);
        assert!((r.row_average.recall_pct - 62.5).abs() < 1e-12);
        assert!(aggregate_saliency(&[]).is_err());
    }

    #[test]
    fn pre_aggregated_rows() {
        let pv = SaliencyReport::from_class_means(&[
            (EarlyBlight, 66.17, 30.50),
            (LateBlight, 49.92, 53.03),
            (HealthyLeaves, 86.80, 44.47),
        ])
        .unwrap();
        assert!((pv.row_average.precision_pct - 67.63).abs() < 0.005);
        assert!((pv.row_average.recall_pct - 42.67).abs() < 0.005);
        let printed = RowAverage { precision_pct: 67.63, recall_pct: 42.67 };
        assert!(pv.check_row_average("PV", printed, 0.005).is_empty());
        let wrong = RowAverage { precision_pct: 70.0, recall_pct: 42.67 };
        assert_eq!(pv.check_row_average("PV", wrong, 0.005).len(), 1);
    }
}
