//! Empirical checks of the inequalities and identities behind the
//! decomposition, each producing a JSON-serializable [`Report`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{choose_lambda, SplitResult};
use crate::error::Result;
use crate::grid::{magnitude, GridField, GridSpec, KInput, TLadder};
use crate::maximal::{hl_max, hp_quasinorm, nontangential_max, ConeParams};
use crate::spectral::{self, gauss_legendre, Spectrum, SynthesisKernels, TrigSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

/// `{check_name, status, constants, samples, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check_name: String,
    pub status: Status,
    pub constants: BTreeMap<String, f64>,
    pub samples: u64,
    pub seed: u64,
}

impl Report {
    pub fn new(name: &str, samples: u64, seed: u64) -> Self {
        Self {
            check_name: name.to_string(),
            status: Status::Pass,
            constants: BTreeMap::new(),
            samples,
            seed,
        }
    }

    pub fn set(&mut self, key: &str, value: f64) -> &mut Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }

    /// Downgrades to `Fail` when `ok` is false (a `ReportOnly` stays as is).
    pub fn require(&mut self, ok: bool) -> &mut Self {
        if !ok && self.status == Status::Pass {
            self.status = Status::Fail;
        }
        self
    }

    pub fn is_blocking_failure(&self) -> bool {
        self.status == Status::Fail
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// How the scalar lemma samples `(t, n, a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaSampling {
    /// All of `t, a, b, c` log-uniform on `[1e-6, 1e6]`, `n` uniform on `[1.01, 10]`.
    LogUniform,
    /// Concentrated at the two equality cases `tb = c, a → 0` and `tⁿa = c, b → 0`.
    NearEquality,
}

/// If `0 ≤ tⁿa + tb − c` then `1/t ≤ factor·(b/c + (a/c)^{1/n})`; the lemma has `factor = 2`.
pub fn scalar_lemma_suite(samples: u64, seed: u64, factor: f64, sampling: LemmaSampling) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-6.0..6.0));
    let mut held = 0u64;
    let mut violations = 0u64;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let t = log_uniform(&mut rng);
        let n = rng.gen_range(1.01..10.0);
        let (a, b, c) = match sampling {
            LemmaSampling::LogUniform => {
                (log_uniform(&mut rng), log_uniform(&mut rng), log_uniform(&mut rng))
            }
            LemmaSampling::NearEquality => {
                let c = log_uniform(&mut rng);
                let slack = 1.0 + rng.gen_range(0.0..1e-9);
                let tiny = 10f64.powf(-rng.gen_range(20.0..40.0));
                if rng.gen_bool(0.5) {
                    (tiny * c / t.powf(n), slack * c / t, c)
                } else {
                    (slack * c / t.powf(n), tiny * c / t, c)
                }
            }
        };
        if t.powf(n) * a + t * b - c < 0.0 {
            continue;
        }
        held += 1;
        let unit = b / c + (a / c).powf(1.0 / n);
        worst = worst.max(1.0 / (t * unit));
        if 1.0 / t > factor * unit {
            violations += 1;
        }
    }
    let mut report = Report::new("scalar-lemma", samples, seed);
    report
        .set("factor", factor)
        .set("premise_held", held as f64)
        .set("violations", violations as f64)
        .set("worst_required_factor", worst)
        .require(violations == 0);
    report
}

fn pointwise_power(f: &GridField, delta: f64) -> GridField {
    f.map(|v| v.abs().powf(delta))
}

/// `|F(y, t)|^δ ≤ P_t ∗ |F(·, 0)|^δ` for the conjugate system, and its consequence
/// `|u|^δ ≤ P_t ∗ (α̃^δ + β̃^δ)`, at every grid point with `t_m ≥ 4h`.
pub fn majorization_check(input: &KInput, ladder: &TLadder, delta: f64, seed: u64) -> Result<Report> {
    let f = &input.f;
    let spec = *f.spec();
    let n = spec.dim();
    let exploratory = delta < (n as f64 - 1.0) / n as f64;
    let system = spectral::conjugate_system(f, ladder)?;
    let mut boundary = vec![f.clone()];
    for axis in 0..n {
        boundary.push(spectral::riesz(f, axis)?);
    }
    let boundary_power = pointwise_power(&magnitude(&boundary.iter().collect::<Vec<_>>())?, delta);
    let majorant = spectral::poisson_extend_any(&boundary_power, ladder)?;
    let split_power = pointwise_power(&input.alpha_tilde()?, delta).add(&pointwise_power(&input.beta_tilde()?, delta))?;
    let split_majorant = spectral::poisson_extend_any(&split_power, ladder)?;
    let eps = 1e-4 * boundary_power.max_abs();
    let floor = 4.0 * spec.spacing() * (1.0 - 1e-12);
    let mut checked = 0u64;
    let mut violations = 0u64;
    let mut consequence_violations = 0u64;
    let mut max_excess = f64::NEG_INFINITY;
    for (m, &t) in ladder.levels().iter().enumerate() {
        if t < floor {
            continue;
        }
        for i in 0..spec.len() {
            let mag = system.iter().map(|c| c.level(m)[i].powi(2)).sum::<f64>().sqrt();
            let lhs = mag.powf(delta);
            let rhs = majorant.level(m)[i];
            checked += 1;
            max_excess = max_excess.max(lhs - rhs);
            if lhs > rhs + eps {
                violations += 1;
            }
            let u = system[0].level(m)[i].abs().powf(delta);
            if u > split_majorant.level(m)[i] * (1.0 + 1e-4) + eps {
                consequence_violations += 1;
            }
        }
    }
    let mut report = Report::new("majorization", checked, seed);
    report
        .set("delta", delta)
        .set("eps_tol", eps)
        .set("violations", violations as f64)
        .set("consequence_violations", consequence_violations as f64)
        .set("max_excess", if checked > 0 { max_excess } else { 0.0 })
        .set("exploratory", flag(exploratory));
    if exploratory {
        report.status = Status::ReportOnly;
    } else {
        report.require(violations == 0 && consequence_violations == 0);
    }
    Ok(report)
}

/// Implied constant in `Nf^δ ≤ C (M(α̃^δ) + M(β̃^δ))`.
pub fn maximal_domination_check(
    input: &KInput,
    ladder: &TLadder,
    cone: &ConeParams,
    delta: f64,
    seed: u64,
) -> Result<Report> {
    let u = spectral::poisson_extend(&input.f, ladder)?;
    let nf = nontangential_max(&u, cone)?;
    let ma = hl_max(&pointwise_power(&input.alpha_tilde()?, delta));
    let mb = hl_max(&pointwise_power(&input.beta_tilde()?, delta));
    let mut ratio = 0.0f64;
    let mut counted = 0u64;
    for i in 0..nf.spec().len() {
        let num = nf.samples()[i].powf(delta);
        let den = ma.samples()[i] + mb.samples()[i];
        if num == 0.0 && den == 0.0 {
            continue;
        }
        counted += 1;
        ratio = ratio.max(num / den);
    }
    let mut report = Report::new("maximal-domination", counted, seed);
    report.set("delta", delta).set("implied_constant", ratio).require(ratio.is_finite());
    Ok(report)
}

/// `|A|^{p1/p2} ≤ C (β^{p1}/λ^{p1} + (α^{p1}/λ^{p1})^{p1/p2})` and its reduction with the λ rule.
pub fn measure_bound_check(input: &KInput, split: &SplitResult, seed: u64) -> Report {
    let d = &split.diagnostics;
    let (p1, p2) = (input.p1, input.p2);
    let mut report = Report::new("measure-bound", 1, seed);
    if d.degenerate || d.lambda <= 0.0 {
        report.status = Status::ReportOnly;
        report.set("degenerate", 1.0);
        return report;
    }
    let measure = d.level_measures.first().copied().unwrap_or(0.0);
    let (alpha, beta, lambda) = (d.alpha, d.beta, d.lambda);
    let x = measure.powf(p1 / p2);
    let y = (beta / lambda).powf(p1) + ((alpha / lambda).powf(p1)).powf(p1 / p2);
    report.set("measure", measure).set("lhs", x).set("rhs", y).set("implied_constant", x / y);
    // with the λ rule both terms equal (α/β)^{p1²/(p2−p1)}
    if let Ok(rule) = choose_lambda(alpha, beta, p1, p2) {
        if (rule - lambda).abs() <= 1e-14 * lambda {
            let reduced = 2.0 * (alpha / beta).powf(p1 * p1 / (p2 - p1));
            let err = (y - reduced).abs() / reduced;
            report.set("reduction_error", err).require(err <= 1e-10);
        }
    }
    report.require((x / y).is_finite());
    report
}

/// Residual of `|∇u|² = ½Δ(u²)` at the interior ladder levels.
#[derive(Debug, Clone)]
pub struct GreenResidual {
    /// `max_y ||∇u|² − ½Δ(u²)|` per level; `NaN` at the two end levels.
    pub per_level: Vec<f64>,
    /// `max |∇u|²` per level.
    pub scale: Vec<f64>,
}

impl GreenResidual {
    pub fn max(&self) -> f64 {
        self.per_level.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max)
    }
}

pub fn green_residual(f: &GridField, ladder: &TLadder) -> Result<GreenResidual> {
    let spec = *f.spec();
    let u = spectral::poisson_extend(f, ladder)?;
    let grad = spectral::grad_poisson(f, ladder)?;
    let t = ladder.levels();
    let count = t.len();
    let squares: Vec<Vec<f64>> = u.levels().iter().map(|l| l.iter().map(|v| v * v).collect()).collect();
    let mut per_level = vec![f64::NAN; count];
    let mut scale = vec![0.0; count];
    for m in 0..count {
        let lhs: Vec<f64> = (0..spec.len())
            .map(|i| grad.iter().map(|g| g.level(m)[i].powi(2)).sum())
            .collect();
        scale[m] = lhs.iter().copied().fold(0.0, f64::max);
        if m == 0 || m + 1 == count {
            continue;
        }
        // u² has twice the bandwidth: square on a doubled grid, then restrict
        let fine = spectral::upsample(&u.level_field(m), 2)?;
        let lap_fine = spectral::laplacian(&fine.map(|v| v * v))?;
        let n_fine = fine.spec().points();
        let lap_y = |i: usize| {
            let c = spec.coords(i);
            let j = match spec.dim() {
                1 => 2 * c[0],
                _ => 2 * c[0] * n_fine + 2 * c[1],
            };
            lap_fine.samples()[j]
        };
        let (h1, h2) = (t[m] - t[m - 1], t[m + 1] - t[m]);
        let mut worst = 0.0f64;
        for i in 0..spec.len() {
            let (a, b, c) = (squares[m - 1][i], squares[m][i], squares[m + 1][i]);
            let dtt = 2.0 * (a * h2 - b * (h1 + h2) + c * h1) / (h1 * h2 * (h1 + h2));
            let rhs = 0.5 * (lap_y(i) + dtt);
            worst = worst.max((lhs[i] - rhs).abs());
        }
        per_level[m] = worst;
    }
    Ok(GreenResidual { per_level, scale })
}

/// Largest occupied `|ξ|` of a field.
fn max_frequency(f: &GridField) -> Result<f64> {
    let spectrum = Spectrum::of(f)?;
    let cutoff = 1e-12 * spectrum.coeffs().iter().fold(0.0f64, |m, c| m.max(c.norm()));
    Ok(spectrum
        .coeffs()
        .iter()
        .zip(spectrum.norms())
        .filter(|(c, _)| c.norm() > cutoff)
        .map(|(_, &r)| r)
        .fold(0.0, f64::max))
}

/// Green identity residual and its convergence under `ρ → √ρ`.
pub fn green_identity_check(f: &GridField, ladder: &TLadder, seed: u64) -> Result<Report> {
    let spec = *f.spec();
    let coarse = green_residual(f, ladder)?;
    let refined = ladder.refined(&spec)?;
    let fine = green_residual(f, &refined)?;
    let count = ladder.len();
    let mut coarse_max = 0.0f64;
    let mut fine_max = 0.0f64;
    for m in 1..count - 1 {
        coarse_max = coarse_max.max(coarse.per_level[m]);
        fine_max = fine_max.max(fine.per_level[2 * m]);
    }
    let scale = coarse.scale.iter().copied().fold(0.0, f64::max);
    let k = max_frequency(f)?;
    let log_ratio = ladder.ratio().ln();
    // leading terms of the three-point second difference on a geometric
    // ladder, (log ρ)²(x/3 + x²/12) relative to ∂_t², x = 2kt, with a safety factor 2
    let tol = ladder
        .levels()
        .iter()
        .zip(&coarse.scale)
        .map(|(&t, &s)| {
            let x = 2.0 * k * t;
            4.0 * log_ratio.powi(2) * (x / 3.0 + x * x / 12.0) * s
        })
        .fold(0.0, f64::max)
        .max(1e-12 * scale);
    let mut report = Report::new("green-identity", (count - 2) as u64, seed);
    report
        .set("residual", coarse_max)
        .set("residual_refined", fine_max)
        .set("relative_residual", if scale > 0.0 { coarse_max / scale } else { 0.0 })
        .set("tolerance", tol);
    if scale == 0.0 {
        report.set("factor", f64::NAN);
        return Ok(report);
    }
    let factor = coarse_max / fine_max;
    report.set("factor", factor).require(coarse_max <= tol && (3.4..=4.6).contains(&factor));
    Ok(report)
}

/// `(∫_B ∂_t u, ∮_{∂B} u n_t)` over the ball of radius `t/2` about `(y, t)`.
///
/// The volume integral sums exact `t`-integrals `u(top) − u(bottom)` over the
/// grid columns inside the ball; the flux uses a fine angular quadrature.
pub fn ball_integrals(series: &TrigSeries, spec: &GridSpec, center: [f64; 2], t: f64) -> (f64, f64) {
    let r = 0.5 * t;
    let h = spec.spacing();
    let reach = (r / h).ceil() as i64;
    let mut volume = 0.0;
    let offsets: Vec<[i64; 2]> = match spec.dim() {
        1 => (-reach..=reach).map(|a| [a, 0]).collect(),
        _ => (-reach..=reach).flat_map(|a| (-reach..=reach).map(move |b| [a, b])).collect(),
    };
    for o in offsets {
        let d2 = h * h * ((o[0] * o[0] + o[1] * o[1]) as f64);
        if d2 >= r * r {
            continue;
        }
        let half = (r * r - d2).sqrt();
        let y = [center[0] + o[0] as f64 * h, center[1] + o[1] as f64 * h];
        volume += series.poisson(y, t + half) - series.poisson(y, t - half);
    }
    volume *= spec.cell_volume();
    let flux = match spec.dim() {
        1 => {
            let nodes = 256;
            let mut acc = 0.0;
            for q in 0..nodes {
                let theta = 2.0 * PI * q as f64 / nodes as f64;
                let y = [center[0] + r * theta.cos(), 0.0];
                acc += series.poisson(y, t + r * theta.sin()) * theta.sin();
            }
            acc * r * 2.0 * PI / nodes as f64
        }
        _ => {
            let (mu, weights) = gauss_legendre(48);
            let azimuths = 96;
            let mut acc = 0.0;
            for (&c, &w) in mu.iter().zip(&weights) {
                let s = (1.0 - c * c).sqrt();
                for q in 0..azimuths {
                    let phi = 2.0 * PI * q as f64 / azimuths as f64;
                    let y = [center[0] + r * s * phi.cos(), center[1] + r * s * phi.sin()];
                    acc += w * c * series.poisson(y, t + r * c);
                }
            }
            acc * r * r * 2.0 * PI / azimuths as f64
        }
    };
    (volume, flux)
}

/// Normwise relative gap `max|V − F| / max|F|` over the given balls.
pub fn ball_divergence_error(f: &GridField, centers: &[(usize, f64)]) -> Result<f64> {
    let spec = *f.spec();
    let series = TrigSeries::of(f)?;
    let mut gap = 0.0f64;
    let mut size = 0.0f64;
    for &(index, t) in centers {
        let (v, fl) = ball_integrals(&series, &spec, spec.position(index), t);
        gap = gap.max((v - fl).abs());
        size = size.max(fl.abs());
    }
    Ok(if size > 0.0 { gap / size } else { gap })
}

/// Divergence identity on random balls at `t_m ≥ 8h`, at `h` and at `h/2`.
pub fn ball_divergence_check(f: &GridField, ladder: &TLadder, samples: usize, seed: u64) -> Result<Report> {
    let spec = *f.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heights: Vec<f64> =
        ladder.levels().iter().copied().filter(|&t| t >= 8.0 * spec.spacing() * (1.0 - 1e-12)).collect();
    let mut report = Report::new("ball-divergence", samples as u64, seed);
    if heights.is_empty() || samples == 0 {
        report.status = Status::ReportOnly;
        return Ok(report);
    }
    let centers: Vec<(usize, f64)> = (0..samples)
        .map(|_| (rng.gen_range(0..spec.len()), heights[rng.gen_range(0..heights.len())]))
        .collect();
    let coarse = ball_divergence_error(f, &centers)?;
    let fine_f = spectral::upsample(f, 2)?;
    let fine_spec = *fine_f.spec();
    let fine_centers: Vec<(usize, f64)> = centers
        .iter()
        .map(|&(i, t)| {
            let c = spec.coords(i);
            (fine_spec.index_wrapped([2 * c[0] as i64, 2 * c[1] as i64]), t)
        })
        .collect();
    let fine = ball_divergence_error(&fine_f, &fine_centers)?;
    let improvement = coarse / fine;
    report
        .set("relative_error", coarse)
        .set("relative_error_refined", fine)
        .set("improvement", improvement)
        .require(coarse <= 5e-2 && (improvement >= 1.7 || coarse <= 1e-12));
    Ok(report)
}

/// Sup of `|u|` and `t|∇u|` on the boundary of every tent piece, scaled by `2^{k+1}λ`.
pub fn boundary_diagnostics(f: &GridField, ladder: &TLadder, split: &SplitResult, seed: u64) -> Result<Report> {
    let mut report = Report::new("boundary-diagnostics", 0, seed);
    let Some(regions) = &split.regions else {
        report.status = Status::ReportOnly;
        return Ok(report);
    };
    let spec = *f.spec();
    let lambda = split.diagnostics.lambda;
    let u = spectral::poisson_extend(f, ladder)?;
    let grad = spectral::grad_poisson(f, ladder)?;
    let count = ladder.len();
    let mut label = vec![u32::MAX; count * spec.len()];
    for (p, piece) in regions.pieces.iter().enumerate() {
        for &(m, i) in &piece.cells {
            label[m * spec.len() + i] = p as u32;
        }
    }
    let n = spec.points() as i64;
    let neighbours = |i: usize| -> Vec<usize> {
        let c = spec.coords(i);
        let (a, b) = (c[0] as i64, c[1] as i64);
        let mut out = vec![spec.index_wrapped([a - 1, b]), spec.index_wrapped([a + 1, b])];
        if spec.dim() == 2 {
            out.push(spec.index_wrapped([a, (b - 1).rem_euclid(n)]));
            out.push(spec.index_wrapped([a, (b + 1).rem_euclid(n)]));
        }
        out
    };
    let mut per_k_u: BTreeMap<usize, f64> = BTreeMap::new();
    let mut per_k_grad: BTreeMap<usize, f64> = BTreeMap::new();
    let mut boundary_cells = 0u64;
    for (p, piece) in regions.pieces.iter().enumerate() {
        let p = p as u32;
        let scale = 2f64.powi(piece.k as i32 + 1) * lambda;
        for &(m, i) in &piece.cells {
            let mut edge = m == 0 || m + 1 == count;
            edge |= !edge && label[(m - 1) * spec.len() + i] != p;
            edge |= !edge && label[(m + 1) * spec.len() + i] != p;
            edge |= !edge && neighbours(i).into_iter().any(|j| label[m * spec.len() + j] != p);
            if !edge {
                continue;
            }
            boundary_cells += 1;
            let t = ladder.levels()[m];
            let g = grad.iter().map(|c| c.level(m)[i].powi(2)).sum::<f64>().sqrt();
            let eu = per_k_u.entry(piece.k).or_insert(0.0);
            *eu = eu.max(u.level(m)[i].abs() / scale);
            let eg = per_k_grad.entry(piece.k).or_insert(0.0);
            *eg = eg.max(t * g / scale);
        }
    }
    report.samples = boundary_cells;
    let mut all_finite = true;
    for (k, v) in &per_k_u {
        report.set(&format!("u_over_level_k{k}"), *v);
        all_finite &= v.is_finite();
    }
    for (k, v) in &per_k_grad {
        report.set(&format!("t_grad_over_level_k{k}"), *v);
        all_finite &= v.is_finite();
    }
    report
        .set("u_over_level", per_k_u.values().copied().fold(0.0, f64::max))
        .set("t_grad_over_level", per_k_grad.values().copied().fold(0.0, f64::max))
        .require(all_finite);
    Ok(report)
}

/// `‖v‖/β`, the λ identity, and the discrete square-function bound.
pub fn v_norm_check(input: &KInput, split: &SplitResult, ladder: &TLadder, seed: u64) -> Result<Report> {
    let d = &split.diagnostics;
    let (p1, p2) = (input.p1, input.p2);
    let mut report = Report::new("v-norm", 1, seed);
    let outside = (p2 - 2.0).abs() > 1e-15;
    let v_norm = split.v.lp_norm(p2)?;
    report
        .set("v_over_beta", if d.beta > 0.0 { v_norm / d.beta } else { 0.0 })
        .set("outside_verified_regime", flag(outside));
    if !d.degenerate && d.alpha > 0.0 && d.beta > 0.0 {
        let lambda = choose_lambda(d.alpha, d.beta, p1, p2)?;
        let err = (lambda.powf(p2 - p1) * d.alpha.powf(p1) - d.beta.powf(p2)).abs() / d.beta.powf(p2);
        report.set("lambda_identity_error", err).require(err <= 1e-10);
    }
    let spec = *input.f.spec();
    let kernels = SynthesisKernels::new(&spec, ladder, &*spectral::build_psi(&spec)?)?;
    let constant = kernels.square_function_constant();
    let spectrum = Spectrum::of(&input.f)?;
    let levels = ladder.levels();
    let weights = ladder.weights();
    let lhs: f64 = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let multiplier: f64 =
                (0..levels.len()).map(|m| weights[m] * kernels.multiplier(m)[i].powi(2) / levels[m]).sum();
            c.norm_sqr() * multiplier
        })
        .sum::<f64>()
        * spec.cell_volume()
        / spec.len() as f64;
    let f2 = input.f.lp_norm(2.0)?.powi(2);
    let ratio = if f2 > 0.0 { lhs / f2 } else { 0.0 };
    report
        .set("square_function_constant", constant)
        .set("square_function_ratio", ratio)
        .require(ratio <= constant * (1.0 + 1e-10) && v_norm.is_finite());
    if outside {
        report.status = Status::ReportOnly;
    }
    Ok(report)
}

/// Implied constants `C_w`, `C_w_atomic`, `C_v` of one decomposition.
pub fn kclosed_verdict(
    input: &KInput,
    split: &SplitResult,
    cone: &ConeParams,
    ladder: &TLadder,
    seed: u64,
) -> Result<Report> {
    let d = &split.diagnostics;
    let (p1, p2) = (input.p1, input.p2);
    let f = &input.f;
    let spec = *f.spec();
    let mut report = Report::new("k-closedness", 1, seed);
    let recon = split.w.add(&split.v)?.sub(f)?.lp_norm(2.0)? / f.lp_norm(2.0)?.max(f64::MIN_POSITIVE);
    let c_w = if d.alpha > 0.0 { hp_quasinorm(&split.w, p1, cone, ladder)? / d.alpha } else { 0.0 };
    let atomic = split.atoms.iter().map(|a| a.coefficient.powf(p1)).sum::<f64>().powf(1.0 / p1);
    let c_w_atomic = if d.alpha > 0.0 { atomic / d.alpha } else { 0.0 };
    let c_v = if d.beta > 0.0 { split.v.lp_norm(2.0)? / d.beta } else { 0.0 };
    report
        .set("reconstruction_error", recon)
        .set("c_w", c_w)
        .set("c_w_atomic", c_w_atomic)
        .set("c_v", c_v);
    let mut finite = c_w.is_finite() && c_w_atomic.is_finite() && c_v.is_finite();
    for axis in 0..spec.dim() {
        let r = spectral::riesz(&split.v, axis)?.lp_norm(2.0)?;
        let value = if d.beta > 0.0 { r / d.beta } else { 0.0 };
        report.set(&format!("c_riesz_v{}", axis + 1), value);
        finite &= value.is_finite();
    }
    if let Some(mask) = split.level_sets.as_ref().and_then(|s| s.masks.first()) {
        let w_on_a = spec.cell_volume()
            * split
                .w
                .samples()
                .iter()
                .zip(mask.cells())
                .filter(|(_, &c)| c)
                .map(|(v, _)| v.abs().powf(p1))
                .sum::<f64>();
        let bound = d.alpha.powf(p1) + mask.measure().powf(1.0 - p1 / p2) * d.beta.powf(p1);
        report.set("w_on_a_constant", w_on_a / bound);
    }
    report.require(recon <= 1e-10 && finite);
    Ok(report)
}
