use serde::{Deserialize, Serialize};

use super::BinaryMask;

/// Pixel adjacency used for component labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            other => Err(format!("connectivity must be 4 or 8, got {other}")),
        }
    }
}

impl From<Connectivity> for u8 {
    fn from(c: Connectivity) -> u8 {
        match c {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Component labels for a mask. Label 0 is background; components are
/// numbered `1..=count` in raster order of their first pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledRegions {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    areas: Vec<usize>,
}

impl LabeledRegions {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn component_count(&self) -> usize {
        self.areas.len()
    }

    /// Area of component `id` (1-based).
    pub fn area(&self, id: u32) -> usize {
        self.areas[id as usize - 1]
    }

    /// Areas indexed by `id - 1`.
    pub fn component_areas(&self) -> &[usize] {
        &self.areas
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let grand = self.parent[self.parent[a as usize] as usize];
            self.parent[a as usize] = grand;
            a = grand;
        }
        a
    }

    // The smaller root wins, so a root is always the provisional label
    // seen first in raster order.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi as usize] = lo;
        lo
    }
}

/// Two-pass union-find labeling.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabeledRegions {
    let (w, h) = mask.dims();
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet { parent: vec![0] };

    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            let mut neighbours = [0u32; 4];
            let mut n = 0;
            let mut push = |xx: isize, yy: isize| {
                if xx >= 0 && yy >= 0 && (xx as usize) < w {
                    let l = provisional[yy as usize * w + xx as usize];
                    if l != 0 {
                        neighbours[n] = l;
                        n += 1;
                    }
                }
            };
            let (xi, yi) = (x as isize, y as isize);
            push(xi - 1, yi);
            push(xi, yi - 1);
            if connectivity == Connectivity::Eight {
                push(xi - 1, yi - 1);
                push(xi + 1, yi - 1);
            }
            let label = if n == 0 {
                let fresh = sets.parent.len() as u32;
                sets.parent.push(fresh);
                fresh
            } else {
                let mut root = neighbours[0];
                for &other in &neighbours[1..n] {
                    root = sets.union(root, other);
                }
                sets.find(root)
            };
            provisional[y * w + x] = label;
        }
    }

    // Provisional labels are created in raster order, and each root is the
    // smallest provisional label of its set, so numbering roots by first
    // appearance keeps the raster-order guarantee.
    let mut dense = vec![0u32; sets.parent.len()];
    let mut areas = Vec::new();
    let mut labels = vec![0u32; w * h];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = sets.find(p) as usize;
        if dense[root] == 0 {
            areas.push(0);
            dense[root] = areas.len() as u32;
        }
        let id = dense[root];
        areas[id as usize - 1] += 1;
        labels[i] = id;
    }

    LabeledRegions {
        width: w,
        height: h,
        labels,
        areas,
    }
}

/// Clears every component whose area is strictly below `min_area`.
pub fn remove_small_components(mask: &BinaryMask, min_area: usize, connectivity: Connectivity) -> BinaryMask {
    if min_area == 0 {
        return mask.clone();
    }
    let regions = connected_components(mask, connectivity);
    let bits = regions
        .labels
        .iter()
        .map(|&l| l != 0 && regions.area(l) >= min_area)
        .collect();
    BinaryMask::new(mask.width(), mask.height(), bits).expect("same dimensions as input")
}
