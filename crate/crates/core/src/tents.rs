//! Tents over Whitney cubes and the stratification of their union by level.

use crate::error::{Error, Result};
use crate::grid::{GridMask, GridSpec, TLadder};
use crate::whitney::{DyadicCube, WhitneyCover};

/// Per-height boolean masks over grid × ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct TentSet {
    spec: GridSpec,
    levels: Vec<Vec<bool>>,
}

impl TentSet {
    pub fn empty(spec: GridSpec, levels: usize) -> Self {
        Self { spec, levels: vec![vec![false; spec.len()]; levels] }
    }

    pub fn full(spec: GridSpec, levels: usize) -> Self {
        Self { spec, levels: vec![vec![true; spec.len()]; levels] }
    }

    pub fn from_fn(spec: GridSpec, levels: usize, member: impl Fn(usize, usize) -> bool) -> Self {
        Self {
            spec,
            levels: (0..levels).map(|m| (0..spec.len()).map(|i| member(m, i)).collect()).collect(),
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, m: usize) -> &[bool] {
        &self.levels[m]
    }

    pub fn contains(&self, m: usize, index: usize) -> bool {
        self.levels[m][index]
    }

    pub fn insert(&mut self, m: usize, index: usize) {
        self.levels[m][index] = true;
    }

    pub fn level_count(&self, m: usize) -> usize {
        self.levels[m].iter().filter(|&&c| c).count()
    }

    pub fn count(&self) -> usize {
        (0..self.levels.len()).map(|m| self.level_count(m)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|l| !l.iter().any(|&c| c))
    }

    fn combine(&self, other: &TentSet, op: impl Fn(bool, bool) -> bool) -> TentSet {
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| op(x, y)).collect())
            .collect();
        TentSet { spec: self.spec, levels }
    }

    pub fn union(&self, other: &TentSet) -> TentSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &TentSet) -> TentSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &TentSet) -> TentSet {
        self.combine(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> TentSet {
        TentSet {
            spec: self.spec,
            levels: self.levels.iter().map(|l| l.iter().map(|&c| !c).collect()).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &TentSet) -> bool {
        self.levels.iter().zip(&other.levels).all(|(a, b)| a.iter().zip(b).all(|(&x, &y)| !x || y))
    }

    /// Spatial projection: cells occupied at some height.
    pub fn shadow(&self) -> GridMask {
        let cells = (0..self.spec.len()).map(|i| self.levels.iter().any(|l| l[i])).collect();
        GridMask::new(self.spec, cells).expect("same grid")
    }

    /// All member cells as `(level, index)`, level-major.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(m, l)| l.iter().enumerate().filter(|(_, &c)| c).map(move |(i, _)| (m, i)))
            .collect()
    }

    /// Run-length encoding `(level, start, length)` of each level's flat mask.
    pub fn runs(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (m, level) in self.levels.iter().enumerate() {
            let mut i = 0;
            while i < level.len() {
                if level[i] {
                    let start = i;
                    while i < level.len() && level[i] {
                        i += 1;
                    }
                    out.push((m, start, i - start));
                } else {
                    i += 1;
                }
            }
        }
        out
    }
}

/// Number of ladder heights inside the tent of a cube of physical side `side`.
pub fn tent_height_count(ladder: &TLadder, side: f64) -> usize {
    ladder.levels().iter().take_while(|&&t| t <= side * (1.0 + 1e-12)).count()
}

/// `{(y, t_m) : y ∈ Q, t_m ≤ s(Q)}`.
pub fn tent(cube: &DyadicCube, spec: &GridSpec, ladder: &TLadder) -> TentSet {
    let mut set = TentSet::empty(*spec, ladder.len());
    let heights = tent_height_count(ladder, cube.side(spec));
    let cells = cube.cells(spec);
    for m in 0..heights {
        for &c in &cells {
            set.insert(m, c);
        }
    }
    set
}

/// One stratum `T_j^k` of the tent union, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct TentPiece {
    pub k: usize,
    pub j: usize,
    pub cube: DyadicCube,
    /// Member `(level, index)` pairs, level-major.
    pub cells: Vec<(usize, usize)>,
}

/// Tent unions per level set and their stratification.
#[derive(Debug, Clone)]
pub struct TentRegions {
    /// `Â^k = ⋃_j tent(Q_j^k)` as built from the covers.
    pub tents: Vec<TentSet>,
    /// Nested tents `Ã^0 = Â^0`, `Ã^k = Â^k ∩ Ã^{k−1}`.
    pub nested: Vec<TentSet>,
    /// Pieces `T_j^k = tent(Q_j^k) ∩ Ã^k ∖ Ã^{k+1}` in `(k, j)` order, empty ones included.
    pub pieces: Vec<TentPiece>,
}

impl TentRegions {
    /// The full tent region `Â^0` (empty when there are no level sets).
    pub fn top(&self, spec: GridSpec, levels: usize) -> TentSet {
        self.tents.first().cloned().unwrap_or_else(|| TentSet::empty(spec, levels))
    }

    /// Verifies that the pieces are pairwise disjoint and cover `Â^0` exactly.
    pub fn check_partition(&self) -> Result<()> {
        let Some(top) = self.tents.first() else {
            return if self.pieces.iter().all(|p| p.cells.is_empty()) {
                Ok(())
            } else {
                Err(Error::PartitionViolation("pieces without a tent union".into()))
            };
        };
        let mut seen = TentSet::empty(*top.spec(), top.num_levels());
        for piece in &self.pieces {
            for &(m, i) in &piece.cells {
                if seen.contains(m, i) {
                    return Err(Error::PartitionViolation(format!(
                        "cell ({m}, {i}) in two pieces (k = {}, j = {})",
                        piece.k, piece.j
                    )));
                }
                seen.insert(m, i);
            }
        }
        if &seen != top {
            return Err(Error::PartitionViolation("pieces do not cover the tent union".into()));
        }
        Ok(())
    }
}

/// Builds `Â^k` and the pieces `T_j^k` from nested masks and their covers.
///
/// Whitney tents of nested sets need not nest, so the strata use the nested
/// tents `Ã^k`; when the raw tents do nest this is exactly `tent(Q_j^k) ∖ Â^{k+1}`.
pub fn tent_regions(
    masks: &[GridMask],
    covers: &[WhitneyCover],
    ladder: &TLadder,
) -> Result<TentRegions> {
    if masks.len() != covers.len() {
        return Err(Error::InvalidInput("one cover per mask required".into()));
    }
    for k in 1..masks.len() {
        if !masks[k].is_subset_of(&masks[k - 1]) {
            return Err(Error::NotNested(k));
        }
    }
    let Some(first) = masks.first() else {
        return Ok(TentRegions { tents: Vec::new(), nested: Vec::new(), pieces: Vec::new() });
    };
    let spec = *first.spec();
    let levels = ladder.len();
    let mut tents = Vec::with_capacity(covers.len());
    for cover in covers {
        let mut set = TentSet::empty(spec, levels);
        for cube in &cover.cubes {
            let heights = tent_height_count(ladder, cube.side(&spec));
            let cells = cube.cells(&spec);
            for m in 0..heights {
                for &c in &cells {
                    set.insert(m, c);
                }
            }
        }
        tents.push(set);
    }
    let mut nested: Vec<TentSet> = Vec::with_capacity(tents.len());
    for (k, t) in tents.iter().enumerate() {
        nested.push(if k == 0 { t.clone() } else { t.intersection(&nested[k - 1]) });
    }
    let mut pieces = Vec::new();
    for (k, cover) in covers.iter().enumerate() {
        let here = &nested[k];
        let above = nested.get(k + 1);
        for (j, cube) in cover.cubes.iter().enumerate() {
            let heights = tent_height_count(ladder, cube.side(&spec));
            let cube_cells = cube.cells(&spec);
            let mut cells = Vec::new();
            for m in 0..heights {
                for &c in &cube_cells {
                    if here.contains(m, c) && !above.is_some_and(|a| a.contains(m, c)) {
                        cells.push((m, c));
                    }
                }
            }
            pieces.push(TentPiece { k, j, cube: *cube, cells });
        }
    }
    Ok(TentRegions { tents, nested, pieces })
}
