//! Periodic sampling grids, sampled fields, the height ladder of the upper
//! half-space and the scalar (quasi-)norms built on top of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Uniform periodic grid on the torus `[0, L)^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, period: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 16"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period {period} must be positive")));
        }
        Ok(Self { dim, points, period })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis `N`.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Grid spacing `h = L / N`.
    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    /// Volume `h^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer coordinates of a flat (row-major) index; unused axes are 0.
    pub fn coords(&self, index: usize) -> [usize; 2] {
        match self.dim {
            1 => [index, 0],
            _ => [index / self.points, index % self.points],
        }
    }

    /// Flat index of integer coordinates taken modulo `N`.
    pub fn index_wrapped(&self, coords: [i64; 2]) -> usize {
        let n = self.points as i64;
        let c0 = coords[0].rem_euclid(n) as usize;
        match self.dim {
            1 => c0,
            _ => c0 * self.points + coords[1].rem_euclid(n) as usize,
        }
    }

    /// Physical position `x_i = i·h` of a sample.
    pub fn position(&self, index: usize) -> [f64; 2] {
        let h = self.spacing();
        let c = self.coords(index);
        [c[0] as f64 * h, c[1] as f64 * h]
    }

    /// The same torus sampled with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.dim, self.points * factor, self.period)
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Torus distance between two integer coordinates along one axis.
pub fn wrapped_offset(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b);
    d.min(n - d)
}

/// Real samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    samples: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { spec, samples })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, samples: vec![0.0; spec.len()] }
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self { spec, samples: vec![value; spec.len()] }
    }

    /// Samples `func` at the physical grid positions.
    pub fn from_fn(spec: GridSpec, func: impl Fn([f64; 2]) -> f64) -> Self {
        let samples = (0..spec.len()).map(|i| func(spec.position(i))).collect();
        Self { spec, samples }
    }

    /// Internal constructor for values produced by this crate's own kernels.
    pub(crate) fn from_raw(spec: GridSpec, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), spec.len());
        Self { spec, samples }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn map(&self, func: impl Fn(f64) -> f64) -> Self {
        Self { spec: self.spec, samples: self.samples.iter().map(|&v| func(v)).collect() }
    }

    pub fn zip_map(&self, other: &GridField, func: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.spec.ensure_same(&other.spec)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| func(a, b)).collect();
        Ok(Self { spec: self.spec, samples })
    }

    pub fn add(&self, other: &GridField) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_finite(&self) -> Result<()> {
        match self.samples.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }

    /// Riemann sum `h^n Σ f`.
    pub fn integrate(&self) -> Result<f64> {
        self.check_finite()?;
        Ok(self.spec.cell_volume() * self.samples.iter().sum::<f64>())
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.integrate()? / self.spec.period().powi(self.spec.dim() as i32))
    }

    /// `(h^n Σ |f|^p)^{1/p}`; a quasi-norm for `p < 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidExponent(p));
        }
        self.check_finite()?;
        let sum: f64 = self.samples.iter().map(|v| v.abs().powf(p)).sum();
        Ok((self.spec.cell_volume() * sum).powf(1.0 / p))
    }

    /// Relative L² distance `‖self − other‖₂ / ‖other‖₂` (absolute when `other` vanishes).
    pub fn relative_l2_error(&self, reference: &GridField) -> Result<f64> {
        let diff = self.sub(reference)?.lp_norm(2.0)?;
        let scale = reference.lp_norm(2.0)?;
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Cells where `pred` holds.
    pub fn mask_where(&self, pred: impl Fn(f64) -> bool) -> GridMask {
        GridMask { spec: self.spec, cells: self.samples.iter().map(|&v| pred(v)).collect() }
    }
}

/// Pointwise Euclidean magnitude `(Σ_i f_i(x)²)^{1/2}` of a tuple of fields.
pub fn magnitude(fields: &[&GridField]) -> Result<GridField> {
    let first = fields.first().ok_or(Error::EmptyFieldList)?;
    let spec = *first.spec();
    let mut acc = vec![0.0; spec.len()];
    for field in fields {
        spec.ensure_same(field.spec())?;
        for (a, v) in acc.iter_mut().zip(field.samples()) {
            *a += v * v;
        }
    }
    Ok(GridField::from_raw(spec, acc.into_iter().map(f64::sqrt).collect()))
}

/// L^p quasi-norm of the pointwise Euclidean magnitude of a tuple of fields.
pub fn tuple_norm(fields: &[&GridField], p: f64) -> Result<f64> {
    magnitude(fields)?.lp_norm(p)
}

/// Boolean cell set on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    spec: GridSpec,
    cells: Vec<bool>,
}

impl GridMask {
    pub fn new(spec: GridSpec, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} mask cells, got {}",
                spec.len(),
                cells.len()
            )));
        }
        Ok(Self { spec, cells })
    }

    pub fn empty(spec: GridSpec) -> Self {
        Self { spec, cells: vec![false; spec.len()] }
    }

    pub fn full(spec: GridSpec) -> Self {
        Self { spec, cells: vec![true; spec.len()] }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, index: usize) -> bool {
        self.cells[index]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|&c| c)
    }

    /// Lebesgue measure `h^n · #cells`.
    pub fn measure(&self) -> f64 {
        self.spec.cell_volume() * self.count() as f64
    }

    pub fn is_subset_of(&self, other: &GridMask) -> bool {
        self.cells.iter().zip(&other.cells).all(|(&a, &b)| !a || b)
    }

    pub fn indicator(&self) -> GridField {
        GridField::from_raw(self.spec, self.cells.iter().map(|&c| f64::from(u8::from(c))).collect())
    }
}

/// Geometric ladder of heights `t_m = t_min ρ^m` with midpoint weights.
///
/// Each height is the geometric midpoint of its cell; interior cell edges
/// sit at `√(t_{m-1} t_m)` and the outer edges are clipped to
/// `[t_min, t_max]`, so the weights sum to `t_max − t_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TLadder {
    t_min: f64,
    ratio: f64,
    levels: Vec<f64>,
    weights: Vec<f64>,
}

impl TLadder {
    /// Default number of heights.
    pub const DEFAULT_COUNT: usize = 48;

    pub fn new(spec: &GridSpec, t_min: f64, ratio: f64, count: usize) -> Result<Self> {
        let ladder = Self::unchecked(t_min, ratio, count)?;
        ladder.validate(spec)?;
        Ok(ladder)
    }

    /// Ladder with `count` heights from `t_min` to `t_max` inclusive.
    pub fn spanning(spec: &GridSpec, t_min: f64, t_max: f64, count: usize) -> Result<Self> {
        if count < 2 || !(t_max > t_min) {
            return Err(Error::InvalidLadder(format!(
                "need count >= 2 and t_max > t_min (got {count}, {t_min}, {t_max})"
            )));
        }
        let ratio = (t_max / t_min).powf(1.0 / (count - 1) as f64);
        let mut ladder = Self::unchecked(t_min, ratio, count)?;
        // pin the top height exactly so that refinements share endpoints
        *ladder.levels.last_mut().expect("count >= 2") = t_max;
        ladder.weights = Self::midpoint_weights(&ladder.levels);
        ladder.validate(spec)?;
        Ok(ladder)
    }

    /// `M = 48`, `t_min = h`, `t_max = L/4`.
    pub fn default_for(spec: &GridSpec) -> Result<Self> {
        Self::spanning(spec, spec.spacing(), spec.period() / 4.0, Self::DEFAULT_COUNT)
    }

    fn unchecked(t_min: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_min.is_finite()) || !(ratio > 1.0 && ratio.is_finite()) || count < 2 {
            return Err(Error::InvalidLadder(format!(
                "t_min = {t_min}, ratio = {ratio}, count = {count}"
            )));
        }
        let levels: Vec<f64> = (0..count).map(|m| t_min * ratio.powi(m as i32)).collect();
        let weights = Self::midpoint_weights(&levels);
        Ok(Self { t_min, ratio, levels, weights })
    }

    fn midpoint_weights(levels: &[f64]) -> Vec<f64> {
        let m = levels.len();
        let mut edges = Vec::with_capacity(m + 1);
        edges.push(levels[0]);
        edges.extend(levels.windows(2).map(|w| (w[0] * w[1]).sqrt()));
        edges.push(levels[m - 1]);
        edges.windows(2).map(|e| e[1] - e[0]).collect()
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        let h = spec.spacing();
        if self.t_min < h * (1.0 - 1e-12) {
            return Err(Error::InvalidLadder(format!("t_min {} below spacing {h}", self.t_min)));
        }
        if self.t_max() > spec.period() / 4.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidLadder(format!(
                "t_max {} above L/4 = {}",
                self.t_max(),
                spec.period() / 4.0
            )));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidLadder("non-positive quadrature weight".into()));
        }
        let total: f64 = self.weights.iter().sum();
        let span = self.t_max() - self.t_min;
        if (total - span).abs() > 0.01 * span {
            return Err(Error::InvalidLadder(format!("weights sum {total} vs span {span}")));
        }
        Ok(())
    }

    /// Halves `log ρ`, keeping both endpoints: `M → 2M − 1`.
    pub fn refined(&self, spec: &GridSpec) -> Result<Self> {
        Self::spanning(spec, self.t_min, self.t_max(), 2 * self.len() - 1)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        *self.levels.last().expect("ladder is never empty")
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Samples `u(y, t_m)` on grid × ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceField {
    spec: GridSpec,
    ladder: TLadder,
    levels: Vec<Vec<f64>>,
}

impl HalfSpaceField {
    pub fn new(spec: GridSpec, ladder: TLadder, levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != ladder.len() {
            return Err(Error::InvalidLadder(format!(
                "{} level slices for a ladder of {}",
                levels.len(),
                ladder.len()
            )));
        }
        if levels.iter().any(|l| l.len() != spec.len()) {
            return Err(Error::InvalidGrid("level slice of wrong size".into()));
        }
        Ok(Self { spec, ladder, levels })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn ladder(&self) -> &TLadder {
        &self.ladder
    }

    pub fn level(&self, m: usize) -> &[f64] {
        &self.levels[m]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn level_field(&self, m: usize) -> GridField {
        GridField::from_raw(self.spec, self.levels[m].clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.levels.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A function `f` together with a splitting `R_i f = α_i + β_i` of its Riesz
/// transforms and the exponent pair `(p1, p2)`.
#[derive(Debug, Clone)]
pub struct KInput {
    pub f: GridField,
    pub alpha: Vec<GridField>,
    pub beta: Vec<GridField>,
    pub p1: f64,
    pub p2: f64,
}

impl KInput {
    pub fn new(
        f: GridField,
        alpha: Vec<GridField>,
        beta: Vec<GridField>,
        p1: f64,
        p2: f64,
    ) -> Result<Self> {
        let input = Self { f, alpha, beta, p1, p2 };
        input.validate()?;
        Ok(input)
    }

    /// Builds the input from `β`, setting `α_i := R_i f − β_i`.
    pub fn from_beta(f: GridField, beta: Vec<GridField>, p1: f64, p2: f64) -> Result<Self> {
        let mut alpha = Vec::with_capacity(beta.len());
        for (axis, b) in beta.iter().enumerate() {
            alpha.push(spectral::riesz(&f, axis)?.sub(b)?);
        }
        Self::new(f, alpha, beta, p1, p2)
    }

    pub fn dim(&self) -> usize {
        self.f.spec().dim()
    }

    pub fn validate(&self) -> Result<()> {
        let spec = *self.f.spec();
        let n = spec.dim();
        let critical = (n as f64 - 1.0) / n as f64;
        if !(self.p1 > critical && self.p1 < 1.0 && self.p2 > 1.0 && self.p2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exponents must satisfy {critical} < p1 < 1 < p2 (got {}, {})",
                self.p1, self.p2
            )));
        }
        if self.alpha.len() != n || self.beta.len() != n {
            return Err(Error::InvalidInput(format!("need {n} alpha and beta components")));
        }
        let norm = self.f.lp_norm(2.0)?;
        if self.f.mean()?.abs() > 1e-12 * norm.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidInput("f must have zero mean".into()));
        }
        for axis in 0..n {
            let rf = spectral::riesz(&self.f, axis)?;
            let sum = self.alpha[axis].add(&self.beta[axis])?;
            let defect = sum.sub(&rf)?.lp_norm(2.0)?;
            if defect > 1e-10 * rf.lp_norm(2.0)?.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidInput(format!(
                    "alpha + beta differs from R_{} f by {defect:e}",
                    axis + 1
                )));
            }
        }
        Ok(())
    }

    /// `α̃ = |(f, α_1, …, α_n)|` pointwise.
    pub fn alpha_tilde(&self) -> Result<GridField> {
        let mut parts = vec![&self.f];
        parts.extend(self.alpha.iter());
        magnitude(&parts)
    }

    /// `β̃ = |(0, β_1, …, β_n)|` pointwise.
    pub fn beta_tilde(&self) -> Result<GridField> {
        magnitude(&self.beta.iter().collect::<Vec<_>>())
    }

    /// `α = ‖(f, α_1, …, α_n)‖_{p1}`.
    pub fn alpha_norm(&self) -> Result<f64> {
        let mut parts = vec![&self.f];
        parts.extend(self.alpha.iter());
        tuple_norm(&parts, self.p1)
    }

    /// `β = ‖(f, β_1, …, β_n)‖_{p2}`.
    pub fn beta_norm(&self) -> Result<f64> {
        let mut parts = vec![&self.f];
        parts.extend(self.beta.iter());
        tuple_norm(&parts, self.p2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line(n: usize) -> GridSpec {
        GridSpec::new(1, n, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 1.0).is_err());
        assert!(GridSpec::new(1, 48, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
        let spec = GridSpec::new(2, 64, 2.0).unwrap();
        assert_eq!(spec.spacing() * 64.0, 2.0);
    }

    #[test]
    fn integrate_examples() {
        let spec = line(64);
        assert_eq!(GridField::constant(spec, 1.0).integrate().unwrap(), 1.0);
        assert_eq!(GridField::zeros(spec).integrate().unwrap(), 0.0);
        let ind = GridField::from_fn(spec, |x| if x[0] < 7.0 / 64.0 - 1e-9 { 1.0 } else { 0.0 });
        assert_relative_eq!(ind.integrate().unwrap(), 7.0 / 64.0, max_relative = 1e-15);
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let spec = line(16);
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(GridField::new(spec, v), Err(Error::NonFinite(3))));
    }

    #[test]
    fn lp_examples() {
        let spec = line(64);
        let ind = GridField::from_fn(spec, |x| if x[0] < 0.25 - 1e-9 { 1.0 } else { 0.0 });
        for p in [0.5, 0.8, 1.0, 2.0, 3.5] {
            assert_relative_eq!(ind.lp_norm(p).unwrap(), 0.25f64.powf(1.0 / p), max_relative = 1e-12);
        }
        let c = GridField::from_fn(spec, |x| (2.0 * PI * x[0]).cos());
        assert_relative_eq!(c.lp_norm(2.0).unwrap(), 0.5f64.sqrt(), max_relative = 1e-12);
        assert!(matches!(c.lp_norm(0.0), Err(Error::InvalidExponent(_))));
        assert!(c.lp_norm(-1.0).is_err());
    }

    #[test]
    fn tuple_norm_examples() {
        let spec = line(32);
        let f = GridField::from_fn(spec, |x| (2.0 * PI * x[0]).sin());
        let z = GridField::zeros(spec);
        assert_eq!(tuple_norm(&[&f], 0.8).unwrap(), f.lp_norm(0.8).unwrap());
        assert_relative_eq!(
            tuple_norm(&[&f, &z, &z], 0.8).unwrap(),
            f.lp_norm(0.8).unwrap(),
            max_relative = 1e-15
        );
        let three = GridField::constant(spec, 3.0);
        let four = GridField::constant(spec, 4.0);
        assert_relative_eq!(tuple_norm(&[&three, &four], 1.0).unwrap(), 5.0, max_relative = 1e-15);
        assert!(matches!(tuple_norm(&[], 1.0), Err(Error::EmptyFieldList)));
    }

    #[test]
    fn measure_examples() {
        let spec = GridSpec::new(2, 64, 1.0).unwrap();
        assert_eq!(GridMask::empty(spec).measure(), 0.0);
        assert_eq!(GridMask::full(spec).measure(), 1.0);
        let mut cells = vec![false; spec.len()];
        for c in cells.iter_mut().take(16) {
            *c = true;
        }
        assert_eq!(GridMask::new(spec, cells).unwrap().measure(), 16.0 / 4096.0);
    }

    #[test]
    fn ladder_weights_cover_the_span() {
        let spec = GridSpec::new(2, 128, 1.0).unwrap();
        let ladder = TLadder::default_for(&spec).unwrap();
        assert_eq!(ladder.len(), 48);
        assert_relative_eq!(ladder.t_min(), spec.spacing());
        assert_relative_eq!(ladder.t_max(), 0.25);
        let total: f64 = ladder.weights().iter().sum();
        assert_relative_eq!(total, 0.25 - spec.spacing(), max_relative = 1e-12);
        assert!(ladder.weights().iter().all(|&w| w > 0.0));
        let fine = ladder.refined(&spec).unwrap();
        assert_eq!(fine.len(), 95);
        assert_relative_eq!(fine.levels()[2 * 10], ladder.levels()[10], max_relative = 1e-12);
        assert_relative_eq!(fine.ratio() * fine.ratio(), ladder.ratio(), max_relative = 1e-12);
    }

    #[test]
    fn ladder_invariants_are_enforced() {
        let spec = line(64);
        assert!(TLadder::new(&spec, spec.spacing() / 2.0, 1.1, 10).is_err());
        assert!(TLadder::spanning(&spec, spec.spacing(), 0.5, 10).is_err());
        assert!(TLadder::new(&spec, spec.spacing(), 1.0, 10).is_err());
        assert!(TLadder::new(&spec, spec.spacing(), 1.1, 1).is_err());
    }

    fn field_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, len)
    }

    proptest! {
        #[test]
        fn lp_is_homogeneous(v in field_strategy(16), c in -5.0f64..5.0, p in 0.3f64..4.0) {
            let spec = line(16);
            let f = GridField::new(spec, v).unwrap();
            let lhs = f.scale(c).lp_norm(p).unwrap();
            let rhs = c.abs() * f.lp_norm(p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn lp_triangle_inequalities(a in field_strategy(16), b in field_strategy(16), p in 0.3f64..4.0) {
            let spec = line(16);
            let f = GridField::new(spec, a).unwrap();
            let g = GridField::new(spec, b).unwrap();
            let sum = f.add(&g).unwrap();
            if p >= 1.0 {
                let lhs = sum.lp_norm(p).unwrap();
                prop_assert!(lhs <= (f.lp_norm(p).unwrap() + g.lp_norm(p).unwrap()) * (1.0 + 1e-12));
            } else {
                let lhs = sum.lp_norm(p).unwrap().powf(p);
                let rhs = f.lp_norm(p).unwrap().powf(p) + g.lp_norm(p).unwrap().powf(p);
                prop_assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }
}
