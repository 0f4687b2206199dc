//! ROI detections: confidence gating, localization scoring against
//! ground-truth boxes, and the image-level class decision.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::rasterize_boxes;
use crate::saliency::{overlap_scores, OverlapScores};

/// Default detection confidence gate. Only detections strictly above it count.
pub const DEFAULT_CONFIDENCE_GATE: f64 = 0.8;

/// The three image classes, in their fixed ordinal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    #[serde(rename = "EB")]
    EarlyBlight,
    #[serde(rename = "LB")]
    LateBlight,
    #[serde(rename = "HL")]
    HealthyLeaves,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::EarlyBlight, ClassLabel::LateBlight, ClassLabel::HealthyLeaves];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> &'static str {
        match self {
            ClassLabel::EarlyBlight => "EB",
            ClassLabel::LateBlight => "LB",
            ClassLabel::HealthyLeaves => "HL",
        }
    }

    pub fn is_disease(self) -> bool {
        self != ClassLabel::HealthyLeaves
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "EB" => Ok(ClassLabel::EarlyBlight),
            "LB" => Ok(ClassLabel::LateBlight),
            "HL" => Ok(ClassLabel::HealthyLeaves),
            other => Err(format!("unknown class `{other}` (expected EB, LB or HL)")),
        }
    }
}

/// Axis-aligned box `[x_min, x_max) x [y_min, y_max)` in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl BoundingBox {
    pub fn new(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> Result<Self> {
        let b = BoundingBox { x_min, y_min, x_max, y_max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Degenerate(format!("empty box {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x_min..self.x_max).contains(&x) && (self.y_min..self.y_max).contains(&y)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x_max <= width && self.y_max <= height
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> usize {
        let w = self.x_max.min(other.x_max).saturating_sub(self.x_min.max(other.x_min));
        let h = self.y_max.min(other.y_max).saturating_sub(self.y_min.max(other.y_min));
        w * h
    }
}

/// Intersection over union with half-open area semantics.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    inter as f64 / (a.area() + b.area() - inter) as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    #[serde(rename = "class")]
    pub label: ClassLabel,
    pub confidence: f64,
}

impl Detection {
    pub fn new(bbox: BoundingBox, label: ClassLabel, confidence: f64) -> Result<Self> {
        let d = Detection { bbox, label, confidence };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Degenerate(format!("confidence {} is outside [0, 1]", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageDecision {
    Decided(ClassLabel),
    NoDecision,
}

impl ImageDecision {
    pub fn label(self) -> Option<ClassLabel> {
        match self {
            ImageDecision::Decided(l) => Some(l),
            ImageDecision::NoDecision => None,
        }
    }
}

/// Keeps detections with confidence strictly above `threshold`, in input order.
pub fn filter_by_confidence(dets: &[Detection], threshold: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.confidence > threshold).copied().collect()
}

/// Pixel overlap between the union of predicted boxes and the union of
/// ground-truth boxes. Labels are ignored.
pub fn detector_overlap(
    pred: &[Detection],
    gt_boxes: &[BoundingBox],
    width: usize,
    height: usize,
) -> Result<OverlapScores> {
    let pred_boxes: Vec<BoundingBox> = pred.iter().map(|d| d.bbox).collect();
    for b in pred_boxes.iter().chain(gt_boxes) {
        if !b.fits(width, height) {
            return Err(Error::OutOfBounds(*b, width, height));
        }
    }
    let gt = rasterize_boxes(gt_boxes, width, height);
    let sm = rasterize_boxes(&pred_boxes, width, height);
    overlap_scores(&gt, &sm)
}

/// Image-level decision from gated detections: the class with the largest
/// summed confidence, ties broken by the largest single confidence and then
/// by class order.
pub fn classify_image(dets: &[Detection], threshold: f64) -> ImageDecision {
    let kept = filter_by_confidence(dets, threshold);
    if kept.is_empty() {
        return ImageDecision::NoDecision;
    }
    let mut per_class: [Vec<f64>; 3] = Default::default();
    for d in &kept {
        per_class[d.label.index()].push(d.confidence);
    }
    // Summing in sorted order makes the result independent of input order.
    let score = |confs: &mut Vec<f64>| -> Option<(f64, f64)> {
        confs.sort_by(f64::total_cmp);
        let max = *confs.last()?;
        Some((confs.iter().sum(), max))
    };

    let mut best: Option<(ClassLabel, f64, f64)> = None;
    for (label, confs) in ClassLabel::ALL.into_iter().zip(per_class.iter_mut()) {
        let Some((sum, max)) = score(confs) else { continue };
        let better = match best {
            None => true,
            // Iteration follows class order, so equality keeps the earlier class.
            Some((_, bs, bm)) => sum > bs || (sum == bs && max > bm),
        };
        if better {
            best = Some((label, sum, max));
        }
    }
    ImageDecision::Decided(best.expect("at least one detection survived").0)
}
