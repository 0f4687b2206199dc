use serde::{Deserialize, Serialize};

use super::rng::Xorshift64Star;
use super::scene::SceneTruth;
use crate::detection::{BoundingBox, ClassLabel, Detection};
use crate::error::{Error, Result};

/// Corruptions applied by [`simulate_detector`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorNoise {
    /// Maximum shift of each box edge, in pixels.
    pub box_jitter: usize,
    pub drop_rate: f64,
    pub mislabel_rate: f64,
    pub confidence_range: (f64, f64),
    /// Mean number of spurious boxes per image (Poisson).
    pub spurious_rate: f64,
}

impl Default for DetectorNoise {
    fn default() -> Self {
        Self::identity()
    }
}

impl DetectorNoise {
    /// Reports every ground-truth box unchanged with confidence 1.
    pub fn identity() -> Self {
        Self {
            box_jitter: 0,
            drop_rate: 0.0,
            mislabel_rate: 0.0,
            confidence_range: (1.0, 1.0),
            spurious_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("drop_rate", self.drop_rate), ("mislabel_rate", self.mislabel_rate)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        let (lo, hi) = self.confidence_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidConfig(format!("confidence_range ({lo}, {hi}) must satisfy 0 <= low <= high <= 1")));
        }
        if !(self.spurious_rate >= 0.0 && self.spurious_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("spurious_rate = {} must be >= 0", self.spurious_rate)));
        }
        Ok(())
    }
}

/// What the simulated detector did to one image.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub kept: usize,
    pub dropped: usize,
    pub mislabeled: usize,
    pub spurious: usize,
}

fn jitter_edge(rng: &mut Xorshift64Star, v: usize, j: usize) -> isize {
    if j == 0 {
        return v as isize;
    }
    v as isize + rng.below(2 * j as u64 + 1) as isize - j as isize
}

fn jitter_box(rng: &mut Xorshift64Star, b: BoundingBox, j: usize, w: usize, h: usize) -> BoundingBox {
    let x0 = jitter_edge(rng, b.x_min, j).clamp(0, w as isize - 1) as usize;
    let y0 = jitter_edge(rng, b.y_min, j).clamp(0, h as isize - 1) as usize;
    let x1 = jitter_edge(rng, b.x_max, j).clamp(x0 as isize + 1, w as isize) as usize;
    let y1 = jitter_edge(rng, b.y_max, j).clamp(y0 as isize + 1, h as isize) as usize;
    BoundingBox::new(x0, y0, x1, y1).expect("clamped to a non-empty box")
}

/// Like [`simulate_detector`] but also reports what was corrupted.
///
/// Ground-truth boxes are visited in order. Each is dropped with
/// `drop_rate`; survivors get every edge shifted uniformly in
/// `[-box_jitter, box_jitter]` (clamped to the image), are relabelled to one
/// of the two other classes with `mislabel_rate`, and receive a confidence
/// uniform in `confidence_range`. A Poisson(`spurious_rate`) number of
/// random boxes with random labels and uniform confidences follows.
pub fn simulate_detector_traced(truth: &SceneTruth, noise: &DetectorNoise, seed: u64) -> Result<(Vec<Detection>, NoiseTrace)> {
    noise.validate()?;
    let (w, h) = truth.image.dims();
    let mut rng = Xorshift64Star::new(seed);
    let mut trace = NoiseTrace::default();
    let mut out = Vec::with_capacity(truth.gt_boxes.len());

    for &(gt, label) in &truth.gt_boxes {
        if rng.bernoulli(noise.drop_rate) {
            trace.dropped += 1;
            continue;
        }
        let bbox = jitter_box(&mut rng, gt, noise.box_jitter, w, h);
        let label = if rng.bernoulli(noise.mislabel_rate) {
            trace.mislabeled += 1;
            let others: Vec<ClassLabel> = ClassLabel::ALL.into_iter().filter(|&c| c != label).collect();
            others[rng.below(2) as usize]
        } else {
            label
        };
        let (lo, hi) = noise.confidence_range;
        out.push(Detection {
            bbox,
            label,
            confidence: rng.uniform(lo, hi),
        });
        trace.kept += 1;
    }

    let extra = rng.poisson(noise.spurious_rate);
    for _ in 0..extra {
        let bw = 1 + rng.below((w / 4).max(1) as u64) as usize;
        let bh = 1 + rng.below((h / 4).max(1) as u64) as usize;
        let x0 = rng.below((w - bw + 1) as u64) as usize;
        let y0 = rng.below((h - bh + 1) as u64) as usize;
        let label = ClassLabel::ALL[rng.below(3) as usize];
        let confidence = rng.next_f64();
        out.push(Detection {
            bbox: BoundingBox::new(x0, y0, x0 + bw, y0 + bh)?,
            label,
            confidence,
        });
        trace.spurious += 1;
    }
    Ok((out, trace))
}

/// Deterministic noisy detector over a scene's ground-truth boxes.
pub fn simulate_detector(truth: &SceneTruth, noise: &DetectorNoise, seed: u64) -> Result<Vec<Detection>> {
    simulate_detector_traced(truth, noise, seed).map(|(d, _)| d)
}
