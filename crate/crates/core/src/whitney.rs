//! Chebyshev distance transform on the torus and Whitney covers of grid sets
//! by dyadic cubes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{wrapped_offset, GridMask, GridSpec};

/// Dyadic cube of `2^level` cells per side anchored at a multiple of `2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DyadicCube {
    pub level: u32,
    pub anchor: [usize; 2],
}

impl DyadicCube {
    pub fn side_cells(&self) -> usize {
        1 << self.level
    }

    /// Physical side `2^level · h`.
    pub fn side(&self, spec: &GridSpec) -> f64 {
        self.side_cells() as f64 * spec.spacing()
    }

    /// Flat indices of the cells of the cube, in row-major order.
    pub fn cells(&self, spec: &GridSpec) -> Vec<usize> {
        self.box_cells(spec, self.anchor.map(|a| a as i64), self.side_cells())
    }

    /// Cells of `2Q`: the concentric cube of twice the side (wrapped).
    pub fn dilated_cells(&self, spec: &GridSpec) -> Vec<usize> {
        let shift = (self.side_cells() / 2) as i64;
        let start = self.anchor.map(|a| a as i64 - shift);
        self.box_cells(spec, start, 2 * self.side_cells())
    }

    /// Measure of `2Q`.
    pub fn dilated_measure(&self, spec: &GridSpec) -> f64 {
        (2.0 * self.side(spec)).powi(spec.dim() as i32)
    }

    fn box_cells(&self, spec: &GridSpec, start: [i64; 2], side: usize) -> Vec<usize> {
        let side = side as i64;
        match spec.dim() {
            1 => (0..side).map(|a| spec.index_wrapped([start[0] + a, 0])).collect(),
            _ => (0..side)
                .flat_map(|a| (0..side).map(move |b| (a, b)))
                .map(|(a, b)| spec.index_wrapped([start[0] + a, start[1] + b]))
                .collect(),
        }
    }

    fn children(&self, dim: usize) -> Vec<DyadicCube> {
        let half = self.side_cells() / 2;
        let level = self.level - 1;
        let a = self.anchor;
        match dim {
            1 => vec![
                DyadicCube { level, anchor: [a[0], 0] },
                DyadicCube { level, anchor: [a[0] + half, 0] },
            ],
            _ => vec![
                DyadicCube { level, anchor: [a[0], a[1]] },
                DyadicCube { level, anchor: [a[0], a[1] + half] },
                DyadicCube { level, anchor: [a[0] + half, a[1]] },
                DyadicCube { level, anchor: [a[0] + half, a[1] + half] },
            ],
        }
    }
}

/// Top dyadic level: cubes of `N/4` cells per side.
pub fn top_level(spec: &GridSpec) -> u32 {
    (spec.points() / 4).trailing_zeros()
}

/// Exact torus-wrapped Chebyshev distance (in cells) from every cell to the
/// nearest cell outside `mask`; zero outside the mask.
pub fn distance_to_complement(mask: &GridMask) -> Result<Vec<u32>> {
    if mask.is_full() {
        return Err(Error::FullMask);
    }
    let spec = *mask.spec();
    let n = spec.points();
    let unreachable = u32::MAX;
    let line_distance = |line: &[bool]| -> Vec<u32> {
        // two circular passes give the exact 1-D torus distance
        let mut d = vec![unreachable; n];
        let mut last: Option<usize> = None;
        for k in 0..2 * n {
            let i = k % n;
            if !line[i] {
                last = Some(k);
            }
            if let Some(l) = last {
                d[i] = d[i].min((k - l) as u32);
            }
        }
        last = None;
        for k in (0..2 * n).rev() {
            let i = k % n;
            if !line[i] {
                last = Some(k);
            }
            if let Some(l) = last {
                d[i] = d[i].min((l - k) as u32);
            }
        }
        d
    };
    if spec.dim() == 1 {
        return Ok(line_distance(mask.cells()));
    }
    let rows: Vec<u32> = mask.cells().chunks(n).flat_map(line_distance).collect();
    let mut out = vec![0u32; spec.len()];
    let mut column = vec![0u32; n];
    for j in 0..n {
        for i in 0..n {
            column[i] = rows[i * n + j];
        }
        for (i, d) in envelope(&column).into_iter().enumerate() {
            out[i * n + j] = d;
        }
    }
    Ok(out)
}

/// `D(i) = min_k max(|i − k|_torus, g(k))`: the smallest `d` such that the
/// window of half-width `d` around `i` holds a value `≤ d`. Binary search
/// over `d` against a sparse range-minimum table of the tripled line.
fn envelope(g: &[u32]) -> Vec<u32> {
    let n = g.len();
    let tripled: Vec<u32> = (0..3 * n).map(|k| g[k % n]).collect();
    let mut table = vec![tripled];
    let mut width = 1;
    while 2 * width <= 3 * n {
        let prev = table.last().expect("non-empty");
        let next: Vec<u32> = (0..prev.len() - width).map(|k| prev[k].min(prev[k + width])).collect();
        table.push(next);
        width *= 2;
    }
    let range_min = |lo: usize, hi: usize| {
        let len = hi - lo + 1;
        let k = usize::BITS - 1 - len.leading_zeros();
        let row = &table[k as usize];
        row[lo].min(row[hi + 1 - (1 << k)])
    };
    (0..n)
        .map(|i| {
            let (mut lo, mut hi) = (0usize, n / 2);
            if range_min(n + i - hi, n + i + hi) > hi as u32 {
                return u32::MAX;
            }
            while lo < hi {
                let mid = (lo + hi) / 2;
                if range_min(n + i - mid, n + i + mid) <= mid as u32 {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            lo as u32
        })
        .collect()
}

/// Dyadic cubes partitioning a grid set, each at distance between one and
/// four sides from the complement.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct WhitneyCover {
    pub cubes: Vec<DyadicCube>,
}

impl WhitneyCover {
    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Checks disjointness, exact union and `1 ≤ dist/side ≤ 4` against `mask`.
    pub fn check(&self, mask: &GridMask) -> Result<()> {
        let spec = *mask.spec();
        let mut owner = vec![false; spec.len()];
        let distances = if mask.is_empty() { vec![0; spec.len()] } else { distance_to_complement(mask)? };
        for cube in &self.cubes {
            if cube.side_cells() > spec.points() / 4 {
                return Err(Error::PartitionViolation(format!("cube {cube:?} too large")));
            }
            let cells = cube.cells(&spec);
            for &c in &cells {
                if owner[c] {
                    return Err(Error::PartitionViolation(format!("cube {cube:?} overlaps")));
                }
                owner[c] = true;
            }
            let dist = cells.iter().map(|&c| distances[c]).min().unwrap_or(0) as usize;
            let side = cube.side_cells();
            if dist < side || dist > 4 * side {
                return Err(Error::PartitionViolation(format!(
                    "cube {cube:?} at distance {dist} (side {side})"
                )));
            }
        }
        if owner != mask.cells() {
            return Err(Error::PartitionViolation("union differs from the mask".into()));
        }
        Ok(())
    }
}

/// Top-down Whitney decomposition of `mask` on the dyadic tree anchored at
/// cell 0: a cube is accepted when it lies in the mask with
/// `side ≤ dist(Q, complement) ≤ 4·side`, otherwise it is split.
pub fn whitney(mask: &GridMask) -> Result<WhitneyCover> {
    if mask.is_empty() {
        return Ok(WhitneyCover::default());
    }
    let spec = *mask.spec();
    let distances = distance_to_complement(mask)?;
    let top = top_level(&spec);
    let step = 1usize << top;
    let mut roots = Vec::new();
    for a in (0..spec.points()).step_by(step) {
        if spec.dim() == 1 {
            roots.push(DyadicCube { level: top, anchor: [a, 0] });
        } else {
            for b in (0..spec.points()).step_by(step) {
                roots.push(DyadicCube { level: top, anchor: [a, b] });
            }
        }
    }
    let mut cubes = Vec::new();
    for root in roots {
        descend(root, &spec, &distances, &mut cubes);
    }
    Ok(WhitneyCover { cubes })
}

fn descend(cube: DyadicCube, spec: &GridSpec, distances: &[u32], out: &mut Vec<DyadicCube>) {
    let cells = cube.cells(spec);
    let (min, max) = cells
        .iter()
        .fold((u32::MAX, 0), |(lo, hi), &c| (lo.min(distances[c]), hi.max(distances[c])));
    if max == 0 {
        return;
    }
    let side = cube.side_cells() as u32;
    if min >= side && min <= 4 * side {
        out.push(cube);
        return;
    }
    if cube.level == 0 {
        // unreachable for top-down splits (dist ≤ 2 here), kept for safety
        if min >= 1 {
            out.push(cube);
        }
        return;
    }
    for child in cube.children(spec.dim()) {
        descend(child, spec, distances, out);
    }
}

/// Brute-force Chebyshev torus distance; used by tests and small checks.
pub fn distance_brute_force(mask: &GridMask) -> Vec<u32> {
    let spec = *mask.spec();
    let n = spec.points();
    let outside: Vec<[usize; 2]> =
        (0..spec.len()).filter(|&i| !mask.get(i)).map(|i| spec.coords(i)).collect();
    (0..spec.len())
        .map(|i| {
            let c = spec.coords(i);
            outside
                .iter()
                .map(|o| wrapped_offset(c[0], o[0], n).max(wrapped_offset(c[1], o[1], n)) as u32)
                .min()
                .unwrap_or(u32::MAX)
        })
        .collect()
}
