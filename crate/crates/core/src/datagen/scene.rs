use serde::{Deserialize, Serialize};

use super::rng::{derive_seed, Xorshift64Star};
use crate::detection::{BoundingBox, ClassLabel};
use crate::error::{Error, Result};
use crate::imaging::{connected_components, mask_to_boxes, BinaryMask, Connectivity, GrayImage, Hsv, RgbImage};

pub const LEAF_HUE_RANGE: (f64, f64) = (0.20, 0.45);
pub const SPOT_HUE_RANGE: (f64, f64) = (0.02, 0.10);
/// Lower bound on saturation and value for painted leaf and spot pixels.
pub const MIN_PAINT_LEVEL: f64 = 0.35;
pub const MIN_SPOT_AREA: usize = 16;

const HUE_JITTER: f64 = 0.01;
const LEVEL_JITTER: f64 = 0.05;
const DARK_BACKGROUND: Hsv = Hsv { h: 0.30, s: 0.40, v: 0.07 };
const SOIL_BACKGROUND: Hsv = Hsv { h: 0.08, s: 0.55, v: 0.45 };

/// Axis-aligned ellipse. A pixel belongs to it iff the pixel centre
/// `(x + 0.5, y + 0.5)` satisfies the ellipse inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
}

impl Ellipse {
    pub fn contains_pixel(&self, x: usize, y: usize) -> bool {
        let dx = (x as f64 + 0.5 - self.cx) / self.rx;
        let dy = (y as f64 + 0.5 - self.cy) / self.ry;
        dx * dx + dy * dy <= 1.0
    }

    pub fn rasterize(&self, width: usize, height: usize) -> BinaryMask {
        BinaryMask::from_fn(width, height, |x, y| self.contains_pixel(x, y))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaintedRegion {
    pub shape: Ellipse,
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotSpec {
    #[serde(flatten)]
    pub region: PaintedRegion,
    pub kind: ClassLabel,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    /// Below the value guard, so thresholding never selects it.
    #[default]
    Dark,
    /// Brownish soil inside the disease hue band; produces false positives.
    Soil,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub leaf: PaintedRegion,
    pub spots: Vec<SpotSpec>,
    #[serde(default)]
    pub background: Background,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneTruth {
    pub image: RgbImage,
    pub disease_mask: BinaryMask,
    pub healthy_mask: BinaryMask,
    pub gt_boxes: Vec<(BoundingBox, ClassLabel)>,
    pub image_class: ClassLabel,
}

impl SceneTruth {
    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.gt_boxes.iter().map(|(b, _)| *b).collect()
    }

    /// Ground-truth mask appropriate to the image class: spots for disease
    /// images, the leaf for healthy ones.
    pub fn class_mask(&self) -> &BinaryMask {
        if self.image_class.is_disease() {
            &self.disease_mask
        } else {
            &self.healthy_mask
        }
    }
}

fn check_range(what: &str, v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::InvalidSpec(format!("{what} = {v} is outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_paint(what: &str, region: &PaintedRegion, hue_range: (f64, f64)) -> Result<()> {
    check_range(&format!("{what} hue"), region.hue, hue_range)?;
    check_range(&format!("{what} saturation"), region.saturation, (MIN_PAINT_LEVEL, 1.0))?;
    check_range(&format!("{what} value"), region.value, (MIN_PAINT_LEVEL, 1.0))?;
    let e = region.shape;
    if !(e.rx > 0.0 && e.ry > 0.0 && e.cx.is_finite() && e.cy.is_finite()) {
        return Err(Error::InvalidSpec(format!("{what} ellipse {e:?} is degenerate")));
    }
    Ok(())
}

impl SceneSpec {
    /// Checks the spec and returns the image class it implies.
    pub fn validate(&self) -> Result<ClassLabel> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec("scene must be at least 1x1".into()));
        }
        check_paint("leaf", &self.leaf, LEAF_HUE_RANGE)?;
        let mut kind = None;
        for (i, spot) in self.spots.iter().enumerate() {
            check_paint(&format!("spot {i}"), &spot.region, SPOT_HUE_RANGE)?;
            if !spot.kind.is_disease() {
                return Err(Error::InvalidSpec(format!("spot {i} has non-disease kind {}", spot.kind)));
            }
            match kind {
                None => kind = Some(spot.kind),
                Some(k) if k != spot.kind => {
                    return Err(Error::InvalidSpec(format!("spot {i} is {} but earlier spots are {k}", spot.kind)))
                }
                _ => {}
            }
        }
        Ok(kind.unwrap_or(ClassLabel::HealthyLeaves))
    }
}

fn jittered(rng: &mut Xorshift64Star, base: Hsv, hue_range: (f64, f64), level_floor: f64) -> [u8; 3] {
    let h = (base.h + rng.uniform(-HUE_JITTER, HUE_JITTER)).clamp(hue_range.0, hue_range.1);
    let s = (base.s + rng.uniform(-LEVEL_JITTER, LEVEL_JITTER)).clamp(level_floor, 1.0);
    let v = (base.v + rng.uniform(-LEVEL_JITTER, LEVEL_JITTER)).clamp(level_floor, 1.0);
    Hsv { h, s, v }.to_rgb()
}

/// Paints background, leaf and spots (in that order) with per-pixel colour
/// jitter drawn from `seed`, and records the exact painted pixel sets.
pub fn generate_scene(spec: &SceneSpec, seed: u64) -> Result<SceneTruth> {
    let image_class = spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let leaf = spec.leaf.shape.rasterize(w, h);
    if leaf.is_empty() {
        return Err(Error::InvalidSpec("leaf covers no pixels".into()));
    }
    let spots: Vec<BinaryMask> = spec.spots.iter().map(|s| s.region.shape.rasterize(w, h)).collect();
    for (i, m) in spots.iter().enumerate() {
        if m.count() < MIN_SPOT_AREA {
            return Err(Error::InvalidSpec(format!(
                "spot {i} covers {} pixels, minimum is {MIN_SPOT_AREA}",
                m.count()
            )));
        }
        if !m.is_subset_of(&leaf) {
            return Err(Error::InvalidSpec(format!("spot {i} extends outside the leaf")));
        }
    }

    let mut rng = Xorshift64Star::new(seed);
    let mut disease_mask = BinaryMask::zeros(w, h);
    let mut healthy_mask = BinaryMask::zeros(w, h);
    let image = RgbImage::from_fn(w, h, |x, y| {
        // Later spots paint over earlier ones.
        if let Some(i) = (0..spots.len()).rev().find(|&i| spots[i].get(x, y)) {
            disease_mask.set(x, y, true);
            let r = spec.spots[i].region;
            let base = Hsv { h: r.hue, s: r.saturation, v: r.value };
            jittered(&mut rng, base, SPOT_HUE_RANGE, MIN_PAINT_LEVEL)
        } else if leaf.get(x, y) {
            healthy_mask.set(x, y, true);
            let r = spec.leaf;
            let base = Hsv { h: r.hue, s: r.saturation, v: r.value };
            jittered(&mut rng, base, LEAF_HUE_RANGE, MIN_PAINT_LEVEL)
        } else {
            match spec.background {
                Background::Dark => {
                    let v = DARK_BACKGROUND.v + rng.uniform(-0.03, 0.03);
                    Hsv { v, ..DARK_BACKGROUND }.to_rgb()
                }
                Background::Soil => jittered(&mut rng, SOIL_BACKGROUND, (0.05, 0.11), 0.3),
            }
        }
    });

    let (box_source, label) = if image_class.is_disease() {
        (&disease_mask, image_class)
    } else {
        (&healthy_mask, ClassLabel::HealthyLeaves)
    };
    let gt_boxes = mask_to_boxes(&connected_components(box_source, Connectivity::Eight))
        .into_iter()
        .map(|b| (b, label))
        .collect();

    Ok(SceneTruth {
        image,
        disease_mask,
        healthy_mask,
        gt_boxes,
        image_class,
    })
}

/// Parameters for drawing random, valid scene specs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSampler {
    pub width: usize,
    pub height: usize,
    /// Disease images get between 1 and `max_spots` spots.
    pub max_spots: usize,
    pub background: Background,
}

impl Default for SceneSampler {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            max_spots: 3,
            background: Background::Dark,
        }
    }
}

/// One generated scene with its id, spec and truth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub id: String,
    pub spec: SceneSpec,
    pub truth: SceneTruth,
}

fn separated(a: &BoundingBox, b: &BoundingBox) -> bool {
    // At least one background column or row between the two boxes.
    a.x_max < b.x_min || b.x_max < a.x_min || a.y_max < b.y_min || b.y_max < a.y_min
}

impl SceneSampler {
    pub fn validate(&self) -> Result<()> {
        if self.width.min(self.height) < 24 {
            return Err(Error::InvalidSpec(format!(
                "sampled scenes need at least 24x24 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if self.max_spots == 0 {
            return Err(Error::InvalidSpec("max_spots must be >= 1".into()));
        }
        Ok(())
    }

    pub fn sample_class(&self, rng: &mut Xorshift64Star) -> ClassLabel {
        ClassLabel::ALL[rng.below(3) as usize]
    }

    /// Draws a spec of the given class. Spots lie inside the leaf, cover at
    /// least [`MIN_SPOT_AREA`] pixels and never touch one another.
    pub fn sample_spec(&self, class: ClassLabel, rng: &mut Xorshift64Star) -> SceneSpec {
        let (w, h) = (self.width as f64, self.height as f64);
        let leaf_shape = Ellipse {
            cx: w / 2.0 + rng.uniform(-0.05, 0.05) * w,
            cy: h / 2.0 + rng.uniform(-0.05, 0.05) * h,
            rx: rng.uniform(0.30, 0.42) * w,
            ry: rng.uniform(0.30, 0.42) * h,
        };
        let leaf = PaintedRegion {
            shape: leaf_shape,
            hue: rng.uniform(LEAF_HUE_RANGE.0, LEAF_HUE_RANGE.1),
            saturation: rng.uniform(0.45, 0.85),
            value: rng.uniform(0.45, 0.85),
        };
        let mut spec = SceneSpec {
            width: self.width,
            height: self.height,
            leaf,
            spots: Vec::new(),
            background: self.background,
        };
        if !class.is_disease() {
            return spec;
        }

        let leaf_mask = leaf_shape.rasterize(self.width, self.height);
        let wanted = 1 + rng.below(self.max_spots as u64) as usize;
        let max_r = (0.2 * leaf_shape.rx.min(leaf_shape.ry)).max(3.5);
        let mut placed: Vec<BoundingBox> = Vec::new();
        let mut attempts = 0;
        while placed.len() < wanted && attempts < 64 * wanted {
            attempts += 1;
            let (rx, ry) = (rng.uniform(3.0, max_r), rng.uniform(3.0, max_r));
            // Centre drawn uniformly from the leaf's bounding square, then
            // accepted only if the whole spot fits.
            let cx = leaf_shape.cx + rng.uniform(-1.0, 1.0) * leaf_shape.rx;
            let cy = leaf_shape.cy + rng.uniform(-1.0, 1.0) * leaf_shape.ry;
            let shape = Ellipse { cx, cy, rx, ry };
            if let Some(b) = self.admit(&shape, &leaf_mask, &placed) {
                placed.push(b);
                spec.spots.push(self.spot(shape, class, rng));
            }
        }
        if spec.spots.is_empty() {
            let shape = Ellipse {
                cx: leaf_shape.cx,
                cy: leaf_shape.cy,
                rx: 3.0,
                ry: 3.0,
            };
            spec.spots.push(self.spot(shape, class, rng));
        }
        spec
    }

    fn admit(&self, shape: &Ellipse, leaf: &BinaryMask, placed: &[BoundingBox]) -> Option<BoundingBox> {
        let m = shape.rasterize(self.width, self.height);
        if m.count() < MIN_SPOT_AREA || !m.is_subset_of(leaf) {
            return None;
        }
        let b = mask_to_boxes(&connected_components(&m, Connectivity::Eight));
        let [b] = b.as_slice() else { return None };
        placed.iter().all(|p| separated(p, b)).then_some(*b)
    }

    fn spot(&self, shape: Ellipse, kind: ClassLabel, rng: &mut Xorshift64Star) -> SpotSpec {
        SpotSpec {
            region: PaintedRegion {
                shape,
                hue: rng.uniform(SPOT_HUE_RANGE.0, SPOT_HUE_RANGE.1),
                saturation: rng.uniform(0.45, 0.85),
                value: rng.uniform(0.40, 0.75),
            },
            kind,
        }
    }

    /// Scene `index` of the batch identified by `seed`. Each scene depends
    /// only on `(seed, index)`.
    pub fn scene(&self, seed: u64, index: usize) -> Result<Scene> {
        self.validate()?;
        let mut rng = Xorshift64Star::new(derive_seed(seed, index as u64));
        let class = self.sample_class(&mut rng);
        let spec = self.sample_spec(class, &mut rng);
        let truth = generate_scene(&spec, rng.next_u64())?;
        Ok(Scene {
            id: format!("scene_{index:05}"),
            spec,
            truth,
        })
    }

    /// Same as [`SceneSampler::scene`] with a forced class.
    pub fn scene_of_class(&self, seed: u64, index: usize, class: ClassLabel) -> Result<Scene> {
        self.validate()?;
        let mut rng = Xorshift64Star::new(derive_seed(seed, index as u64));
        let _ = self.sample_class(&mut rng);
        let spec = self.sample_spec(class, &mut rng);
        let truth = generate_scene(&spec, rng.next_u64())?;
        Ok(Scene {
            id: format!("scene_{index:05}"),
            spec,
            truth,
        })
    }
}

/// Generates `count` scenes in parallel; the output is independent of
/// the thread count.
pub fn generate_batch(sampler: &SceneSampler, count: usize, seed: u64) -> Result<Vec<Scene>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(|i| sampler.scene(seed, i)).collect()
}

/// Colour-coded saliency overlay in which `mask` is rendered pure red and
/// everything else pure blue.
pub fn render_saliency_overlay(mask: &BinaryMask) -> RgbImage {
    RgbImage::from_fn(mask.width(), mask.height(), |x, y| {
        if mask.get(x, y) {
            [255, 0, 0]
        } else {
            [0, 0, 255]
        }
    })
}

/// Scalar attention raster: 255 on `mask`, 0 elsewhere.
pub fn render_attention(mask: &BinaryMask) -> GrayImage {
    mask.to_gray()
}
