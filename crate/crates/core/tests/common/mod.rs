//! Oracles and input strategies shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::VecDeque;

use proptest::prelude::*;

use leafroi::detection::{BoundingBox, ClassLabel, Detection};
use leafroi::imaging::{connected_components, BinaryMask, Connectivity};
use leafroi::metrics::ConfusionMatrix;

// ---------------------------------------------------------------- oracles

/// Erosion straight from the definition: every window pixel must be inside
/// the image and set.
pub fn erode_oracle(m: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = m.dims();
    let r = r as isize;
    BinaryMask::from_fn(w, h, |x, y| {
        (-r..=r).all(|dy| {
            (-r..=r).all(|dx| {
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && m.get(xx as usize, yy as usize)
            })
        })
    })
}

/// Dilation from the definition: any in-image window pixel set.
pub fn dilate_oracle(m: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = m.dims();
    let r = r as isize;
    BinaryMask::from_fn(w, h, |x, y| {
        (-r..=r).any(|dy| {
            (-r..=r).any(|dx| {
                let (xx, yy) = (x as isize + dx, y as isize + dy);
                xx >= 0 && yy >= 0 && (xx as usize) < w && (yy as usize) < h && m.get(xx as usize, yy as usize)
            })
        })
    })
}

/// Breadth-first flood fill started from each unlabelled foreground pixel
/// in raster order, so ids come out in first-pixel raster order.
pub fn flood_fill_oracle(m: &BinaryMask, eight: bool) -> (Vec<u32>, usize) {
    let (w, h) = m.dims();
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let offsets: &[(isize, isize)] = if eight {
        &[(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    } else {
        &[(0, -1), (-1, 0), (1, 0), (0, 1)]
    };
    for y in 0..h {
        for x in 0..w {
            if !m.get(x, y) || labels[y * w + x] != 0 {
                continue;
            }
            next += 1;
            labels[y * w + x] = next;
            let mut queue = VecDeque::from([(x, y)]);
            while let Some((cx, cy)) = queue.pop_front() {
                for &(dx, dy) in offsets {
                    let (nx, ny) = (cx as isize + dx, cy as isize + dy);
                    if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    if m.get(nx, ny) && labels[ny * w + nx] == 0 {
                        labels[ny * w + nx] = next;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
    }
    (labels, next as usize)
}

pub fn check_components_against_oracle(m: &BinaryMask) {
    for (conn, eight) in [(Connectivity::Four, false), (Connectivity::Eight, true)] {
        let got = connected_components(m, conn);
        let (labels, count) = flood_fill_oracle(m, eight);
        assert_eq!(got.component_count(), count, "count, {conn:?}, {m:?}");
        assert_eq!(got.labels(), &labels[..], "labels, {conn:?}, {m:?}");
    }
}

// -------------------------------------------------------------- strategies

pub fn mask_with_dims(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    (0.05f64..0.95).prop_flat_map(move |density| {
        proptest::collection::vec(proptest::bool::weighted(density), w * h)
            .prop_map(move |bits| BinaryMask::new(w, h, bits).unwrap())
    })
}

pub fn mask_up_to(max: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| mask_with_dims(w, h))
}

/// A mask large enough for a square element of the returned radius.
pub fn mask_and_radius() -> impl Strategy<Value = (BinaryMask, usize)> {
    (1usize..=3).prop_flat_map(|r| {
        let min = 2 * r + 2;
        ((min..=64usize), (min..=64usize)).prop_flat_map(move |(w, h)| (mask_with_dims(w, h), Just(r)))
    })
}

pub fn mask_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1usize..=24, 1usize..=24).prop_flat_map(|(w, h)| (mask_with_dims(w, h), mask_with_dims(w, h)))
}

pub fn bbox_in(w: usize, h: usize) -> impl Strategy<Value = BoundingBox> {
    (0..w, 0..h).prop_flat_map(move |(x0, y0)| {
        ((x0 + 1)..=w, (y0 + 1)..=h).prop_map(move |(x1, y1)| BoundingBox::new(x0, y0, x1, y1).unwrap())
    })
}

pub fn label() -> impl Strategy<Value = ClassLabel> {
    prop_oneof![Just(ClassLabel::EarlyBlight), Just(ClassLabel::LateBlight), Just(ClassLabel::HealthyLeaves)]
}

pub fn detection(confidence: impl Strategy<Value = f64>) -> impl Strategy<Value = Detection> {
    (bbox_in(32, 32), label(), confidence).prop_map(|(bbox, label, confidence)| Detection { bbox, label, confidence })
}

pub fn confusion() -> impl Strategy<Value = ConfusionMatrix> {
    (
        proptest::array::uniform3(proptest::array::uniform3(0u64..200)),
        proptest::array::uniform3(0u64..20),
    )
        .prop_map(|(counts, no_decision)| {
            let mut cm = ConfusionMatrix::from_counts(counts);
            cm.no_decision = no_decision;
            cm
        })
}

pub fn close_to(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

