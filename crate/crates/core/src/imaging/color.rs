use serde::{Deserialize, Serialize};

use super::{BinaryMask, HsvImage, RgbImage};
use crate::error::{Error, Result};

/// One HSV pixel. `h` is a fraction of a full turn in `[0, 1)`; `s` and `v`
/// are in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    /// Hexcone RGB to HSV. Achromatic pixels (max == min) get `h = 0` and `s = 0`.
    pub fn from_rgb([r, g, b]: [u8; 3]) -> Self {
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let v = f64::from(max) / 255.0;
        if max == min {
            return Hsv { h: 0.0, s: 0.0, v };
        }
        let delta = f64::from(max - min);
        let s = delta / f64::from(max);
        let sector = if max == r {
            let t = (f64::from(g) - f64::from(b)) / delta;
            if t < 0.0 {
                t + 6.0
            } else {
                t
            }
        } else if max == g {
            2.0 + (f64::from(b) - f64::from(r)) / delta
        } else {
            4.0 + (f64::from(r) - f64::from(g)) / delta
        };
        let mut h = sector / 6.0;
        if h >= 1.0 {
            h = 0.0;
        }
        Hsv { h, s, v }
    }

    /// Inverse hexcone conversion, rounded to the nearest 8-bit level.
    pub fn to_rgb(self) -> [u8; 3] {
        let v = self.v.clamp(0.0, 1.0);
        let s = self.s.clamp(0.0, 1.0);
        let h = self.h.rem_euclid(1.0) * 6.0;
        let sector = (h.floor() as usize).min(5);
        let f = h - sector as f64;
        let p = v * (1.0 - s);
        let q = v * (1.0 - s * f);
        let t = v * (1.0 - s * (1.0 - f));
        let (r, g, b) = match sector {
            0 => (v, t, p),
            1 => (q, v, p),
            2 => (p, v, t),
            3 => (p, q, v),
            4 => (t, p, v),
            _ => (v, p, q),
        };
        let q8 = |c: f64| (c * 255.0).round().clamp(0.0, 255.0) as u8;
        [q8(r), q8(g), q8(b)]
    }
}

pub fn rgb_to_hsv(image: &RgbImage) -> HsvImage {
    HsvImage {
        width: image.width(),
        height: image.height(),
        pixels: image.pixels().iter().map(|&p| Hsv::from_rgb(p)).collect(),
    }
}

pub fn hsv_to_rgb(image: &HsvImage) -> RgbImage {
    RgbImage::new(
        image.width(),
        image.height(),
        image.pixels().iter().map(|p| p.to_rgb()).collect(),
    )
    .expect("dimensions carried over from a valid raster")
}

/// Which hue band a ground-truth mask selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    DiseaseSpot,
    HealthyLeaf,
}

/// Hue bands for ground-truth binarisation plus saturation/value guards that
/// keep achromatic and near-black pixels out of both bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub disease_hue_max: f64,
    pub healthy_hue_min: f64,
    pub healthy_hue_max: f64,
    pub min_saturation: f64,
    pub min_value: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            disease_hue_max: 0.15,
            healthy_hue_min: 0.15,
            healthy_hue_max: 0.60,
            min_saturation: 0.20,
            min_value: 0.15,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.disease_hue_max
            && self.disease_hue_max <= self.healthy_hue_min
            && self.healthy_hue_min <= self.healthy_hue_max
            && self.healthy_hue_max < 1.0;
        if !ordered {
            return Err(Error::InvalidConfig(format!(
                "hue bands must satisfy 0 <= disease_hue_max ({}) <= healthy_hue_min ({}) <= healthy_hue_max ({}) < 1",
                self.disease_hue_max, self.healthy_hue_min, self.healthy_hue_max
            )));
        }
        for (name, v) in [("min_saturation", self.min_saturation), ("min_value", self.min_value)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Band membership for a single pixel.
    pub fn accepts(&self, kind: MaskKind, px: Hsv) -> bool {
        if px.s < self.min_saturation || px.v < self.min_value {
            return false;
        }
        match kind {
            MaskKind::DiseaseSpot => px.h < self.disease_hue_max,
            MaskKind::HealthyLeaf => self.healthy_hue_min <= px.h && px.h <= self.healthy_hue_max,
        }
    }
}

/// Ground-truth mask from hue thresholding. Disease band is `h < disease_hue_max`,
/// healthy band is the closed interval `[healthy_hue_min, healthy_hue_max]`.
pub fn threshold_ground_truth(image: &RgbImage, kind: MaskKind, cfg: &ThresholdConfig) -> BinaryMask {
    let bits = image
        .pixels()
        .iter()
        .map(|&p| cfg.accepts(kind, Hsv::from_rgb(p)))
        .collect();
    BinaryMask::new(image.width(), image.height(), bits).expect("dimensions carried over from a valid raster")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primaries() {
        let red = Hsv::from_rgb([255, 0, 0]);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        let green = Hsv::from_rgb([0, 255, 0]);
        assert_eq!((green.h, green.s, green.v), (1.0 / 3.0, 1.0, 1.0));
        let blue = Hsv::from_rgb([0, 0, 255]);
        assert_eq!(blue.h, 2.0 / 3.0);
    }

    #[test]
    fn achromatic_has_zero_hue_and_saturation() {
        let g = Hsv::from_rgb([128, 128, 128]);
        assert_eq!((g.h, g.s, g.v), (0.0, 0.0, 128.0 / 255.0));
        assert_eq!(Hsv::from_rgb([0, 0, 0]), Hsv { h: 0.0, s: 0.0, v: 0.0 });
    }

    #[test]
    fn magenta_side_stays_below_one() {
        let px = Hsv::from_rgb([255, 0, 1]);
        assert!(px.h > 0.99 && px.h < 1.0);
    }

    #[test]
    fn exhaustive_round_trip_on_a_lattice() {
        for r in (0..=255u16).step_by(5) {
            for g in (0..=255u16).step_by(5) {
                for b in (0..=255u16).step_by(5) {
                    let rgb = [r as u8, g as u8, b as u8];
                    let px = Hsv::from_rgb(rgb);
                    assert!((0.0..1.0).contains(&px.h));
                    let back = px.to_rgb();
                    for c in 0..3 {
                        assert!((i16::from(back[c]) - i16::from(rgb[c])).abs() <= 1, "{rgb:?} -> {back:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn green_image_is_healthy_not_diseased() {
        let img = RgbImage::filled(4, 3, [0, 255, 0]);
        let cfg = ThresholdConfig::default();
        assert_eq!(threshold_ground_truth(&img, MaskKind::HealthyLeaf, &cfg), BinaryMask::ones(4, 3));
        assert_eq!(threshold_ground_truth(&img, MaskKind::DiseaseSpot, &cfg), BinaryMask::zeros(4, 3));
    }

    #[test]
    fn dark_pixels_fail_the_value_guard() {
        let img = RgbImage::filled(2, 2, [20, 2, 1]);
        let cfg = ThresholdConfig::default();
        assert!(threshold_ground_truth(&img, MaskKind::DiseaseSpot, &cfg).is_empty());
    }

    #[test]
    fn band_edges() {
        let cfg = ThresholdConfig::default();
        let at = |h: f64| Hsv { h, s: 1.0, v: 1.0 };
        assert!(!cfg.accepts(MaskKind::DiseaseSpot, at(0.15)));
        assert!(cfg.accepts(MaskKind::HealthyLeaf, at(0.15)));
        assert!(cfg.accepts(MaskKind::HealthyLeaf, at(0.60)));
        assert!(!cfg.accepts(MaskKind::HealthyLeaf, at(0.6000001)));
    }

    #[test]
    fn config_validation() {
        assert!(ThresholdConfig::default().validate().is_ok());
        let bad = ThresholdConfig {
            disease_hue_max: 0.3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ThresholdConfig {
            min_value: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
