use serde::{Deserialize, Serialize};

use super::components::{remove_small_components, Connectivity};
use super::BinaryMask;
use crate::error::{Error, Result};

/// Square footprint of side `2 * radius + 1`, centred on the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuringElement {
    radius: usize,
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self { radius: 1 }
    }
}

impl StructuringElement {
    pub fn square(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::InvalidConfig("structuring element radius must be >= 1".into()));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn check_fits(&self, mask: &BinaryMask) -> Result<()> {
        let limit = mask.width().min(mask.height());
        if self.side() >= limit {
            return Err(Error::Degenerate(format!(
                "{0}x{0} structuring element does not fit a {1}x{2} mask",
                self.side(),
                mask.width(),
                mask.height()
            )));
        }
        Ok(())
    }
}

// The square footprint is separable: a horizontal pass followed by a
// vertical pass over the intermediate result gives the 2-D window exactly.
// Pixels beyond the border read as background.
fn separable(mask: &BinaryMask, radius: usize, want_all: bool) -> BinaryMask {
    let (w, h) = mask.dims();
    let r = radius as isize;
    let window = |get: &dyn Fn(isize) -> Option<bool>, centre: isize| -> bool {
        let mut it = (centre - r..=centre + r).map(get);
        if want_all {
            it.all(|v| v.unwrap_or(false))
        } else {
            it.any(|v| v.unwrap_or(false))
        }
    };

    let mut rows = vec![false; w * h];
    for y in 0..h {
        let get = |x: isize| (0..w as isize).contains(&x).then(|| mask.get(x as usize, y));
        for x in 0..w {
            rows[y * w + x] = window(&get, x as isize);
        }
    }
    BinaryMask::from_fn(w, h, |x, y| {
        let get = |yy: isize| (0..h as isize).contains(&yy).then(|| rows[yy as usize * w + x]);
        window(&get, y as isize)
    })
}

/// Pixel survives iff the whole footprint lies inside the image and is foreground.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> Result<BinaryMask> {
    se.check_fits(mask)?;
    Ok(separable(mask, se.radius, true))
}

/// Pixel is set iff any in-image pixel under the footprint is foreground.
pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> Result<BinaryMask> {
    se.check_fits(mask)?;
    Ok(separable(mask, se.radius, false))
}

/// Erosion followed by dilation.
pub fn open(mask: &BinaryMask, se: StructuringElement) -> Result<BinaryMask> {
    dilate(&erode(mask, se)?, se)
}

/// Dilation followed by erosion. Because erosion treats the outside as
/// background, pixels within `radius` of the border are always cleared.
pub fn close(mask: &BinaryMask, se: StructuringElement) -> Result<BinaryMask> {
    erode(&dilate(mask, se)?, se)
}

/// Mask clean-up pipeline: opening, closing, then small-component removal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub radius: usize,
    pub min_area: usize,
    pub connectivity: Connectivity,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            radius: 1,
            min_area: 32,
            connectivity: Connectivity::Eight,
        }
    }
}

pub fn refine_mask(mask: &BinaryMask, cfg: &RefineConfig) -> Result<BinaryMask> {
    let se = StructuringElement::square(cfg.radius)?;
    let cleaned = close(&open(mask, se)?, se)?;
    Ok(remove_small_components(&cleaned, cfg.min_area, cfg.connectivity))
}
