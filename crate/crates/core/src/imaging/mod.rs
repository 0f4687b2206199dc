//! Raster primitives: RGB/HSV/grayscale images, binary masks, hue-band
//! thresholding, square-footprint morphology, connected-component labeling
//! and mask/box conversion.
//!
//! Every raster is row-major with the origin at the top-left corner. All
//! operations are pure and return fresh values.

mod boxes;
mod color;
mod components;
mod morphology;

pub use boxes::{mask_to_boxes, rasterize_boxes};
pub use color::{hsv_to_rgb, rgb_to_hsv, threshold_ground_truth, Hsv, MaskKind, ThresholdConfig};
pub use components::{connected_components, remove_small_components, Connectivity, LabeledRegions};
pub use morphology::{close, dilate, erode, open, refine_mask, RefineConfig, StructuringElement};

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Degenerate(format!("raster must be at least 1x1, got {width}x{height}")));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Format(format!(
            "{width}x{height} raster needs {} pixels, got {len}",
            width * height
        )));
    }
    Ok(())
}

/// 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    /// Solid-colour image. Panics on a zero dimension.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        Self::new(width, height, vec![rgb; width * height]).expect("non-empty raster")
    }

    /// Panics on a zero dimension.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels).expect("non-empty raster")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }
}

/// Single-channel 8-bit raster (scalar attention maps, PGM payloads).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self { width, height, values })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("non-empty raster")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }
}

/// HSV raster with every channel normalised to the unit interval.
#[derive(Clone, Debug, PartialEq)]
pub struct HsvImage {
    width: usize,
    height: usize,
    pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Hsv] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Hsv {
        self.pixels[y * self.width + x]
    }
}

/// Foreground/background raster.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    /// All-background mask. Panics on a zero dimension.
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height]).expect("non-empty raster")
    }

    /// All-foreground mask. Panics on a zero dimension.
    pub fn ones(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![true; width * height]).expect("non-empty raster")
    }

    /// Panics on a zero dimension.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits).expect("non-empty raster")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// True when every foreground pixel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Pixelwise AND. Errors when the dimensions differ.
    pub fn intersection(&self, other: &BinaryMask) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    /// Pixelwise OR. Errors when the dimensions differ.
    pub fn union(&self, other: &BinaryMask) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// 0/255 grayscale rendering used for PGM serialisation.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Inverse of [`BinaryMask::to_gray`]; any value other than 0 or 255 is rejected.
    pub fn from_gray(gray: &GrayImage) -> Result<Self> {
        let bits = gray
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| match v {
                0 => Ok(false),
                255 => Ok(true),
                other => Err(Error::Format(format!(
                    "mask value {other} at pixel ({}, {}) is neither 0 nor 255",
                    i % gray.width,
                    i / gray.width
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(gray.width, gray.height, bits)
    }
}
