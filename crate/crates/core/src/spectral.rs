//! Fourier multipliers on the torus: Riesz transforms, the Poisson extension
//! and its derivatives, the Calderón kernel `ψ`, and synthesis of
//! `∫∫ 1_R(y,t) ∂_t u(y,t) ψ_t(x − y) dy dt` over a region `R` of grid × ladder.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftGrid;
use crate::grid::{GridField, GridSpec, HalfSpaceField, TLadder};
use crate::tents::TentSet;

/// Spectrum of a real field, reused across many multipliers.
pub struct Spectrum {
    fft: FftGrid,
    coeffs: Vec<Complex64>,
    norms: Vec<f64>,
}

impl Spectrum {
    pub fn of(f: &GridField) -> Result<Self> {
        if let Some(i) = f.samples().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let fft = FftGrid::new(*f.spec());
        let coeffs = fft.forward_real(f.samples());
        let norms = fft.frequency_norms();
        Ok(Self { fft, coeffs, norms })
    }

    pub fn spec(&self) -> &GridSpec {
        self.fft.spec()
    }

    pub fn fft(&self) -> &FftGrid {
        &self.fft
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `|ξ|` per spectral index.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Inverse transform of `m(ξ) f̂(ξ)`; the closure receives the spectral
    /// index, the wavevector and `|ξ|`.
    pub fn filter(&self, symbol: impl Fn(usize, [f64; 2], f64) -> Complex64) -> Vec<f64> {
        let product = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * symbol(i, self.fft.wavevector(i), self.norms[i]))
            .collect();
        self.fft.inverse_real(product)
    }

    fn filter_radial(&self, weights: impl Fn(f64) -> f64) -> Vec<f64> {
        self.filter(|_, _, r| Complex64::new(weights(r), 0.0))
    }

    /// `i ξ_axis` with the Nyquist line zeroed so that real input stays real.
    fn derivative_symbol(&self, index: usize, xi: [f64; 2], axis: usize) -> Complex64 {
        if self.fft.is_nyquist(index, axis) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, xi[axis])
        }
    }
}

/// Riesz transform `R_axis` (multiplier `−i ξ_axis / |ξ|`, zero at `ξ = 0`).
/// Axes are numbered from 0.
pub fn riesz(f: &GridField, axis: usize) -> Result<GridField> {
    if axis >= f.spec().dim() {
        return Err(Error::InvalidInput(format!("axis {axis} out of range")));
    }
    let spectrum = Spectrum::of(f)?;
    let out = spectrum.filter(|i, xi, r| {
        if r == 0.0 || spectrum.fft.is_nyquist(i, axis) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -xi[axis] / r)
        }
    });
    Ok(GridField::from_raw(*f.spec(), out))
}

/// Spectral Laplacian in `y`.
pub fn laplacian(f: &GridField) -> Result<GridField> {
    let spectrum = Spectrum::of(f)?;
    Ok(GridField::from_raw(*f.spec(), spectrum.filter_radial(|r| -r * r)))
}

/// Poisson semigroup at a single height `t ≥ 0`.
pub fn poisson_at(f: &GridField, t: f64) -> Result<GridField> {
    let spectrum = Spectrum::of(f)?;
    Ok(GridField::from_raw(*f.spec(), spectrum.filter_radial(|r| (-t * r).exp())))
}

fn extend(
    f: &GridField,
    ladder: &TLadder,
    check_mean: bool,
    symbol: impl Fn(&Spectrum, usize, [f64; 2], f64, f64) -> Complex64 + Sync,
) -> Result<HalfSpaceField> {
    let spec = *f.spec();
    ladder.validate(&spec)?;
    let spectrum = Spectrum::of(f)?;
    if check_mean && spectrum.coeffs[0].norm() > 1e-12 * spec.len() as f64 * f.max_abs().max(f64::MIN_POSITIVE) {
        log::warn!("extending a field with non-zero mean");
    }
    let levels = ladder
        .levels()
        .par_iter()
        .map(|&t| spectrum.filter(|i, xi, r| symbol(&spectrum, i, xi, r, t)))
        .collect();
    HalfSpaceField::new(spec, ladder.clone(), levels)
}

/// `u(·, t_m) = f ∗ P_{t_m}` for every ladder height.
pub fn poisson_extend(f: &GridField, ladder: &TLadder) -> Result<HalfSpaceField> {
    extend(f, ladder, true, |_, _, _, r, t| Complex64::new((-t * r).exp(), 0.0))
}

/// Poisson extension of a field that may have non-zero mean (e.g. a
/// non-negative majorant); no mean warning.
pub fn poisson_extend_any(f: &GridField, ladder: &TLadder) -> Result<HalfSpaceField> {
    extend(f, ladder, false, |_, _, _, r, t| Complex64::new((-t * r).exp(), 0.0))
}

/// `∂_t u(·, t_m)`.
pub fn dt_poisson(f: &GridField, ladder: &TLadder) -> Result<HalfSpaceField> {
    extend(f, ladder, true, |_, _, _, r, t| Complex64::new(-r * (-t * r).exp(), 0.0))
}

/// `(∂_t u, ∂_{y_1} u, …, ∂_{y_n} u)` on the ladder.
pub fn grad_poisson(f: &GridField, ladder: &TLadder) -> Result<Vec<HalfSpaceField>> {
    let mut out = vec![dt_poisson(f, ladder)?];
    for axis in 0..f.spec().dim() {
        out.push(extend(f, ladder, true, move |s, i, xi, r, t| {
            s.derivative_symbol(i, xi, axis) * (-t * r).exp()
        })?);
    }
    Ok(out)
}

/// Conjugate system `(u, u_1, …, u_n)` with `u_i` the Poisson extension of `R_i f`.
pub fn conjugate_system(f: &GridField, ladder: &TLadder) -> Result<Vec<HalfSpaceField>> {
    let mut out = vec![poisson_extend(f, ladder)?];
    for axis in 0..f.spec().dim() {
        out.push(poisson_extend(&riesz(f, axis)?, ladder)?);
    }
    Ok(out)
}

/// Spectral interpolation onto a grid with `factor` times as many points per
/// axis. The Nyquist line is dropped, so this is exact for fields without
/// Nyquist content.
pub fn upsample(f: &GridField, factor: usize) -> Result<GridField> {
    let fine = f.spec().refined(factor)?;
    let spectrum = Spectrum::of(f)?;
    let fine_fft = FftGrid::new(fine);
    let n = f.spec().points() as i64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); fine.len()];
    let scale = fine.len() as f64 / f.spec().len() as f64;
    for (i, c) in spectrum.coeffs.iter().enumerate() {
        let k = spectrum.fft.mode(i);
        if k[0] == -n / 2 || (fine.dim() == 2 && k[1] == -n / 2) {
            continue;
        }
        coeffs[fine.index_wrapped(k)] = c * scale;
    }
    Ok(GridField::from_raw(fine, fine_fft.inverse_real(coeffs)))
}

/// Band-limited trigonometric series of a grid field, evaluable off the grid.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    dim: usize,
    modes: Vec<([f64; 2], f64, Complex64)>,
}

impl TrigSeries {
    pub fn of(f: &GridField) -> Result<Self> {
        let spectrum = Spectrum::of(f)?;
        let len = f.spec().len() as f64;
        let cutoff = 1e-15 * spectrum.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let modes = spectrum
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > cutoff)
            .map(|(i, c)| (spectrum.fft.wavevector(i), spectrum.norms[i], c / len))
            .collect();
        Ok(Self { dim: f.spec().dim(), modes })
    }

    fn sum(&self, y: [f64; 2], t: f64, weight: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (xi, r, c) in &self.modes {
            let phase = xi[0] * y[0] + if self.dim == 2 { xi[1] * y[1] } else { 0.0 };
            let e = Complex64::new(0.0, phase).exp();
            acc += (c * e).re * weight(*r) * (-t * r).exp();
        }
        acc
    }

    /// `u(y, t)`.
    pub fn poisson(&self, y: [f64; 2], t: f64) -> f64 {
        self.sum(y, t, |_| 1.0)
    }

    /// `∂_t u(y, t)`.
    pub fn dt_poisson(&self, y: [f64; 2], t: f64) -> f64 {
        self.sum(y, t, |r| -r)
    }
}

/// The canonical radial bump `exp(−1/(1 − 4r²))` on `r < 1/2`.
pub fn bump(r: f64) -> f64 {
    let q = 1.0 - 4.0 * r * r;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Radial Fourier transform of [`bump`] in dimension `dim`, evaluated on a
/// fixed quadrature of the (projected) profile.
struct BumpTransform {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl BumpTransform {
    const NODES: usize = 2048;

    fn new(dim: usize) -> Self {
        // all derivatives of the profile vanish at |x| = 1/2, so the
        // trapezoid rule on [-1/2, 1/2] converges super-algebraically
        let step = 0.5 / Self::NODES as f64;
        let mut nodes = Vec::with_capacity(Self::NODES);
        let mut weights = Vec::with_capacity(Self::NODES);
        for j in 0..Self::NODES {
            let x = j as f64 * step;
            let profile = match dim {
                1 => bump(x),
                _ => projected_bump(x),
            };
            let w = if j == 0 { step } else { 2.0 * step };
            nodes.push(x);
            weights.push(w * profile);
        }
        Self { nodes, weights }
    }

    fn eval(&self, s: f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * (s * x).cos()).sum()
    }
}

/// Line integral of the 2-D bump along `y` at abscissa `x`.
pub fn projected_bump(x: f64) -> f64 {
    let half = (0.25 - x * x).max(0.0).sqrt();
    if half == 0.0 {
        return 0.0;
    }
    let n = 1024;
    let step = half / n as f64;
    let mut acc = 0.5 * bump(x.abs());
    for j in 1..n {
        let y = j as f64 * step;
        acc += bump((x * x + y * y).sqrt());
    }
    2.0 * step * acc
}

/// Normalized Calderón kernel `ψ = c (φ − 2ⁿ φ(2·))`, stored as a dense
/// radial table of `ψ̂`.
#[derive(Debug, Clone)]
pub struct CalderonKernel {
    dim: usize,
    normalization: f64,
    bump_mass: f64,
    table_step: f64,
    table: Vec<f64>,
}

impl CalderonKernel {
    /// Support radius of `ψ` in space.
    pub const SUPPORT_RADIUS: f64 = 0.5;
    /// Radial table nodes (`s ∈ [0, TABLE_MAX]`).
    pub const TABLE_NODES: usize = 8192;
    pub const TABLE_MAX: f64 = 256.0;

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalization constant `c`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// `∫ φ` of the unnormalized bump.
    pub fn bump_mass(&self) -> f64 {
        self.bump_mass
    }

    /// `ψ̂(s)` along any direction (the kernel is radial); zero beyond the table.
    pub fn hat(&self, s: f64) -> f64 {
        let x = s.abs() / self.table_step;
        let last = self.table.len() - 1;
        if x >= last as f64 {
            return 0.0;
        }
        // four-point Lagrange interpolation, mirrored at the origin (ψ̂ is even)
        let i = x.floor() as i64;
        let frac = x - i as f64;
        let at = |k: i64| self.table[k.unsigned_abs().min(last as u64) as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let (a, b, c, d) = (frac + 1.0, frac, frac - 1.0, frac - 2.0);
        -p0 * b * c * d / 6.0 + p1 * a * c * d / 2.0 - p2 * a * b * d / 2.0 + p3 * a * b * c / 6.0
    }

    /// `−∫₀^∞ e^{−s} ψ̂(s) ds`, by composite Gauss–Legendre on the table.
    pub fn calderon_integral(&self) -> f64 {
        -calderon_quadrature(|s| self.hat(s))
    }

    /// Spatial profile `ψ(x)` at radius `r`.
    pub fn profile(&self, r: f64) -> f64 {
        self.normalization * (bump(r) - 2f64.powi(self.dim as i32) * bump(2.0 * r))
    }
}

fn calderon_quadrature(g: impl Fn(f64) -> f64) -> f64 {
    // e^{-s} < 1e-26 past s = 60
    let (nodes, weights) = gauss_legendre(16);
    let panels = 240;
    let width = 60.0 / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = p as f64 * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let s = a + 0.5 * width * (x + 1.0);
            acc += 0.5 * width * w * (-s).exp() * g(s);
        }
    }
    acc
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Builds (and caches per dimension) the normalized Calderón kernel.
pub fn build_psi(spec: &GridSpec) -> Result<Arc<CalderonKernel>> {
    static CACHE: [OnceLock<Arc<CalderonKernel>>; 2] = [OnceLock::new(), OnceLock::new()];
    let dim = spec.dim();
    if let Some(k) = CACHE[dim - 1].get() {
        return Ok(k.clone());
    }
    let kernel = Arc::new(compute_psi(dim)?);
    Ok(CACHE[dim - 1].get_or_init(|| kernel).clone())
}

fn compute_psi(dim: usize) -> Result<CalderonKernel> {
    let transform = BumpTransform::new(dim);
    let table_step = CalderonKernel::TABLE_MAX / (CalderonKernel::TABLE_NODES - 1) as f64;
    let phi_hat: Vec<f64> = (0..CalderonKernel::TABLE_NODES)
        .into_par_iter()
        .map(|i| transform.eval(i as f64 * table_step))
        .collect();
    let bump_mass = phi_hat[0];
    let table = (0..phi_hat.len())
        .map(|i| {
            let half = if i % 2 == 0 { phi_hat[i / 2] } else { transform.eval(0.5 * i as f64 * table_step) };
            phi_hat[i] - half
        })
        .collect();
    let mut raw = CalderonKernel { dim, normalization: 1.0, bump_mass, table_step, table };
    raw.table[0] = 0.0;
    let integral = raw.calderon_integral();
    if integral.abs() < 1e-6 {
        return Err(Error::DegenerateProfile(integral));
    }
    let c = 1.0 / integral;
    raw.table.iter_mut().for_each(|v| *v *= c);
    raw.normalization = c;
    Ok(raw)
}

/// Per-level sampled kernels `ψ_{t_m}` for one (grid, ladder) pair.
///
/// `h^n ψ_t(x) ≈ c ∫φ (φ(x/t)/a₁ − φ(2x/t)/a₂)` where `a₁, a₂` are the
/// discrete masses of the two sampled bumps, so every sampled kernel sums to
/// zero exactly and is supported in `|x| < t/2`.
pub struct SynthesisKernels {
    spec: GridSpec,
    ladder: TLadder,
    stencils: Vec<Vec<(i64, i64, f64)>>,
    multipliers: Vec<Vec<f64>>,
}

impl SynthesisKernels {
    pub fn new(spec: &GridSpec, ladder: &TLadder, kernel: &CalderonKernel) -> Result<Arc<Self>> {
        type Key = (usize, usize, u64, Vec<u64>);
        static CACHE: OnceLock<Mutex<Vec<(Key, Arc<SynthesisKernels>)>>> = OnceLock::new();
        ladder.validate(spec)?;
        if kernel.dim() != spec.dim() {
            return Err(Error::GridMismatch("kernel dimension differs from grid".into()));
        }
        let key: Key = (
            spec.dim(),
            spec.points(),
            spec.period().to_bits(),
            ladder.levels().iter().map(|t| t.to_bits()).collect(),
        );
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        if let Some((_, hit)) = cache.lock().expect("kernel cache poisoned").iter().find(|(k, _)| *k == key) {
            return Ok(hit.clone());
        }
        let fft = FftGrid::new(*spec);
        let built: Vec<_> = ladder
            .levels()
            .par_iter()
            .map(|&t| {
                let stencil = sampled_kernel(spec, kernel, t);
                let mut dense = vec![0.0; spec.len()];
                for &(a, b, v) in &stencil {
                    dense[spec.index_wrapped([a, b])] += v;
                }
                let hat: Vec<f64> = fft.forward_real(&dense).into_iter().map(|c| c.re).collect();
                (stencil, hat)
            })
            .collect();
        let (stencils, multipliers) = built.into_iter().unzip();
        let kernels = Arc::new(Self { spec: *spec, ladder: ladder.clone(), stencils, multipliers });
        let mut guard = cache.lock().expect("kernel cache poisoned");
        if guard.len() > 16 {
            guard.remove(0);
        }
        guard.push((key, kernels.clone()));
        Ok(kernels)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn ladder(&self) -> &TLadder {
        &self.ladder
    }

    /// Sparse stencil `(offset, value)` of `h^n ψ_{t_m}` (cell volume folded in).
    pub fn stencil(&self, m: usize) -> &[(i64, i64, f64)] {
        &self.stencils[m]
    }

    /// DFT of the sampled kernel at level `m` (real and even).
    pub fn multiplier(&self, m: usize) -> &[f64] {
        &self.multipliers[m]
    }

    /// Discrete reproduction weight `Σ_m Δ_m (−|ξ|) e^{−t_m|ξ|} ψ̂_m(ξ)` per spectral index.
    pub fn reproduction_weights(&self) -> Vec<f64> {
        let norms = FftGrid::new(self.spec).frequency_norms();
        let levels = self.ladder.levels();
        let weights = self.ladder.weights();
        norms
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                (0..levels.len())
                    .map(|m| weights[m] * (-r) * (-levels[m] * r).exp() * self.multipliers[m][i])
                    .sum()
            })
            .collect()
    }

    /// `sup_ξ Σ_m Δ_m |ψ̂_m(ξ)|² / t_m` over the discrete multipliers.
    pub fn square_function_constant(&self) -> f64 {
        let levels = self.ladder.levels();
        let weights = self.ladder.weights();
        (0..self.spec.len())
            .map(|i| {
                (0..levels.len())
                    .map(|m| weights[m] * self.multipliers[m][i].powi(2) / levels[m])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn sampled_kernel(spec: &GridSpec, kernel: &CalderonKernel, t: f64) -> Vec<(i64, i64, f64)> {
    let h = spec.spacing();
    let dim = spec.dim();
    let reach = (0.5 * t / h).ceil() as i64;
    let offsets: Vec<(i64, i64)> = match dim {
        1 => (-reach..=reach).map(|a| (a, 0)).collect(),
        _ => (-reach..=reach).flat_map(|a| (-reach..=reach).map(move |b| (a, b))).collect(),
    };
    let mut wide = Vec::new();
    let mut narrow = Vec::new();
    for &(a, b) in &offsets {
        let r = h * ((a * a + b * b) as f64).sqrt() / t;
        wide.push(bump(r));
        narrow.push(bump(2.0 * r));
    }
    let wide_mass: f64 = wide.iter().sum();
    let narrow_mass: f64 = narrow.iter().sum();
    // each sampled bump carries unit discrete mass, standing in for
    // h^n t^{-n} φ(x/t) / ∫φ and its narrow twin; c ∫φ restores the scale
    let scale = kernel.normalization() * kernel.bump_mass();
    let mut stencil: Vec<(i64, i64, f64)> = offsets
        .iter()
        .zip(wide.iter().zip(&narrow))
        .map(|(&(a, b), (w, v))| (a, b, scale * (w / wide_mass - v / narrow_mass)))
        .filter(|&(a, b, v)| v != 0.0 || (a, b) == (0, 0))
        .collect();
    // the centre value is a difference of two near-equal numbers; take it from
    // the others so the discrete sum vanishes to rounding of small terms
    let centre = stencil.iter().position(|s| (s.0, s.1) == (0, 0)).expect("centre offset");
    stencil[centre].2 = 0.0;
    stencil[centre].2 = -stencil.iter().map(|s| s.2).sum::<f64>();
    stencil.retain(|s| s.2 != 0.0);
    stencil
}

fn check_region(dtu: &HalfSpaceField, region: &TentSet, kernels: &SynthesisKernels) -> Result<()> {
    dtu.spec().ensure_same(kernels.spec())?;
    dtu.spec().ensure_same(region.spec())?;
    if dtu.ladder() != kernels.ladder() || region.num_levels() != dtu.ladder().len() {
        return Err(Error::InvalidLadder("ladder mismatch between field, region and kernels".into()));
    }
    Ok(())
}

/// `Σ_m Δ_m (1_{R,m} ∂_t u_m) ∗ ψ_{t_m}`, evaluated spectrally.
pub fn masked_synthesis(
    dtu: &HalfSpaceField,
    region: &TentSet,
    kernels: &SynthesisKernels,
) -> Result<GridField> {
    check_region(dtu, region, kernels)?;
    let spec = *dtu.spec();
    let fft = FftGrid::new(spec);
    let weights = dtu.ladder().weights();
    let active: Vec<usize> = (0..weights.len()).filter(|&m| region.level_count(m) > 0).collect();
    let per_level: Vec<Vec<Complex64>> = active
        .par_iter()
        .map(|&m| {
            let cells = region.level(m);
            let masked: Vec<f64> =
                dtu.level(m).iter().zip(cells).map(|(&v, &c)| if c { v } else { 0.0 }).collect();
            let mut hat = fft.forward_real(&masked);
            let mult = kernels.multiplier(m);
            for (c, k) in hat.iter_mut().zip(mult) {
                *c *= weights[m] * k;
            }
            hat
        })
        .collect();
    // fixed summation order over levels
    let mut total = vec![Complex64::new(0.0, 0.0); spec.len()];
    for hat in &per_level {
        for (t, c) in total.iter_mut().zip(hat) {
            *t += c;
        }
    }
    Ok(GridField::from_raw(spec, fft.inverse_real(total)))
}

/// Same operator as [`masked_synthesis`] by direct periodic convolution;
/// preferred for small regions and exact outside the kernel reach.
pub fn masked_synthesis_direct(
    dtu: &HalfSpaceField,
    region: &TentSet,
    kernels: &SynthesisKernels,
) -> Result<GridField> {
    check_region(dtu, region, kernels)?;
    let spec = *dtu.spec();
    let weights = dtu.ladder().weights();
    let mut out = vec![0.0; spec.len()];
    for m in 0..weights.len() {
        if region.level_count(m) == 0 {
            continue;
        }
        let level = dtu.level(m);
        let stencil = kernels.stencil(m);
        for (idx, &inside) in region.level(m).iter().enumerate() {
            if !inside {
                continue;
            }
            let source = weights[m] * level[idx];
            let c = spec.coords(idx);
            for &(a, b, k) in stencil {
                out[spec.index_wrapped([c[0] as i64 + a, c[1] as i64 + b])] += source * k;
            }
        }
    }
    Ok(GridField::from_raw(spec, out))
}
