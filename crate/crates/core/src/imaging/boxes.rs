use super::{BinaryMask, LabeledRegions};
use crate::detection::BoundingBox;

/// One tight, half-open box per component, ordered by component id.
pub fn mask_to_boxes(regions: &LabeledRegions) -> Vec<BoundingBox> {
    let n = regions.component_count();
    let mut extents = vec![(usize::MAX, usize::MAX, 0usize, 0usize); n];
    for y in 0..regions.height() {
        for x in 0..regions.width() {
            let id = regions.label(x, y);
            if id == 0 {
                continue;
            }
            let e = &mut extents[id as usize - 1];
            e.0 = e.0.min(x);
            e.1 = e.1.min(y);
            e.2 = e.2.max(x + 1);
            e.3 = e.3.max(y + 1);
        }
    }
    extents
        .into_iter()
        .map(|(x0, y0, x1, y1)| BoundingBox::new(x0, y0, x1, y1).expect("component boxes are non-empty"))
        .collect()
}

/// Union of box interiors, clipped to the raster.
pub fn rasterize_boxes(boxes: &[BoundingBox], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::zeros(width, height);
    for b in boxes {
        for y in b.y_min.min(height)..b.y_max.min(height) {
            for x in b.x_min.min(width)..b.x_max.min(width) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}
