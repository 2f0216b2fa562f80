//! Deterministic band-limited test functions and splittings of their Riesz
//! transforms.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fft::FftGrid;
use crate::grid::{GridField, GridSpec, KInput};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Random trigonometric sums.
    Trig,
    /// Differences of two equal-width Gaussian bumps.
    Bumps,
    /// Narrow Mexican-hat profiles (negative Laplacian of a Gaussian).
    Spikes,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Trig, Family::Bumps, Family::Spikes];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Trig => "trig",
            Family::Bumps => "bumps",
            Family::Spikes => "spikes",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(Family::name).collect();
            Error::Config(format!("unknown family {s:?}; valid names: {}", names.join(", ")))
        })
    }
}

/// How `R_i f` is divided into `α_i + β_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SplitRule {
    /// `β_i = clamp(R_i f, ±τ_i)` with `τ_i` the given quantile of `|R_i f|`.
    HeightThreshold { quantile: f64 },
    /// `β_i = R_i f · 1_E` for `E` a union of boxes `[lo, lo + size)` in units of the period.
    RandomMask { boxes: Vec<([f64; 2], [f64; 2])> },
}

impl SplitRule {
    pub fn name(&self) -> &'static str {
        match self {
            SplitRule::HeightThreshold { .. } => "height-threshold",
            SplitRule::RandomMask { .. } => "random-mask",
        }
    }

    pub fn beta(&self, f: &GridField) -> Result<Vec<GridField>> {
        let spec = *f.spec();
        (0..spec.dim())
            .map(|axis| {
                let r = spectral::riesz(f, axis)?;
                Ok(match self {
                    SplitRule::HeightThreshold { quantile } => {
                        let tau = quantile_abs(r.samples(), *quantile);
                        r.map(|v| v.clamp(-tau, tau))
                    }
                    SplitRule::RandomMask { boxes } => {
                        let period = spec.period();
                        let inside = |x: [f64; 2]| {
                            boxes.iter().any(|(lo, size)| {
                                (0..spec.dim()).all(|d| {
                                    let rel = (x[d] / period - lo[d]).rem_euclid(1.0);
                                    rel < size[d]
                                })
                            })
                        };
                        let samples = r
                            .samples()
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| if inside(spec.position(i)) { v } else { 0.0 })
                            .collect();
                        GridField::new(spec, samples)?
                    }
                })
            })
            .collect()
    }
}

fn quantile_abs(values: &[f64], q: f64) -> f64 {
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let pos = ((abs.len() - 1) as f64 * q.clamp(0.0, 1.0)).round() as usize;
    abs[pos]
}

/// Real field `Σ_k a_k cos(ξ_k·x) + b_k sin(ξ_k·x)`, `ξ_k = 2πk/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierField {
    pub modes: Vec<([i64; 2], f64, f64)>,
}

impl FourierField {
    /// Largest `|k_i|` over modes and axes.
    pub fn bandwidth(&self) -> i64 {
        self.modes.iter().map(|(k, _, _)| k[0].abs().max(k[1].abs())).max().unwrap_or(0)
    }

    pub fn evaluate(&self, spec: &GridSpec) -> Result<GridField> {
        let n = spec.points() as i64;
        if 2 * self.bandwidth() >= n {
            return Err(Error::InvalidInput(format!(
                "bandwidth {} not resolved on {n} points",
                self.bandwidth()
            )));
        }
        let fft = FftGrid::new(*spec);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); spec.len()];
        let half = 0.5 * spec.len() as f64;
        for &(k, a, b) in &self.modes {
            if k == [0, 0] {
                continue;
            }
            let c = Complex64::new(a, -b) * half;
            coeffs[spec.index_wrapped(k)] += c;
            coeffs[spec.index_wrapped([-k[0], -k[1]])] += c.conj();
        }
        GridField::new(*spec, fft.inverse_real(coeffs))
    }
}

/// Modes with `0 < max|k_i| ≤ kmax` in a half-plane, one per `±k` pair.
fn half_plane(dim: usize, kmax: i64) -> Vec<[i64; 2]> {
    let mut out = Vec::new();
    match dim {
        1 => out.extend((1..=kmax).map(|k| [k, 0])),
        _ => {
            for a in 0..=kmax {
                for b in -kmax..=kmax {
                    if a > 0 || b > 0 {
                        out.push([a, b]);
                    }
                }
            }
        }
    }
    out
}

/// Real-form coefficients of `Σ_{k∈ℤⁿ} w(k) e^{−iξ·c} e^{iξ·x}` for a real even weight.
fn shifted_series(dim: usize, kmax: i64, period: f64, center: [f64; 2], weight: impl Fn(f64) -> f64) -> Vec<([i64; 2], f64, f64)> {
    half_plane(dim, kmax)
        .into_iter()
        .map(|k| {
            let xi = [2.0 * std::f64::consts::PI * k[0] as f64 / period, 2.0 * std::f64::consts::PI * k[1] as f64 / period];
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            let phase = xi[0] * center[0] + xi[1] * center[1];
            let w = 2.0 * weight(r);
            (k, w * phase.cos(), w * phase.sin())
        })
        .collect()
}

fn gaussian_weight(dim: usize, sigma: f64, period: f64) -> impl Fn(f64) -> f64 {
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(dim as f64 / 2.0) / period.powi(dim as i32);
    move |r| norm * (-0.5 * sigma * sigma * r * r).exp()
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub id: usize,
    pub family: Family,
    pub rule: SplitRule,
    pub series: FourierField,
    pub input: KInput,
    pub hash: String,
}

/// Parameters of a corpus independent of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub families: Vec<Family>,
    pub items: usize,
    pub seed: u64,
    pub kmax: usize,
}

/// Random stream of item `id`, independent of generation order.
pub fn item_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

/// The function and split rule of one item; depends only on `(seed, id)`,
/// the family list, the dimension, the period and `kmax`.
pub fn draw_item(corpus: &CorpusSpec, dim: usize, period: f64, id: usize) -> Result<(Family, SplitRule, FourierField)> {
    if corpus.families.is_empty() {
        return Err(Error::Config("corpus needs at least one family".into()));
    }
    if corpus.kmax == 0 {
        return Err(Error::Config("corpus kmax must be positive".into()));
    }
    let family = corpus.families[id % corpus.families.len()];
    let mut rng = item_rng(corpus.seed, id);
    let kmax = corpus.kmax as i64;
    let point = |rng: &mut ChaCha8Rng| [rng.gen::<f64>() * period, if dim == 2 { rng.gen::<f64>() * period } else { 0.0 }];
    let modes = match family {
        Family::Trig => {
            let count = rng.gen_range(4..=8);
            let pool = half_plane(dim, kmax);
            (0..count)
                .map(|_| {
                    let k = pool[rng.gen_range(0..pool.len())];
                    (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
                .collect()
        }
        Family::Bumps => {
            let sigma = rng.gen_range(0.04..0.08) * period;
            let scale = rng.gen_range(0.5..2.0);
            let (c1, c2) = (point(&mut rng), point(&mut rng));
            let weight = gaussian_weight(dim, sigma, period);
            let first = shifted_series(dim, kmax, period, c1, &weight);
            let second = shifted_series(dim, kmax, period, c2, &weight);
            first
                .into_iter()
                .zip(second)
                .map(|((k, a1, b1), (_, a2, b2))| (k, scale * (a1 - a2), scale * (b1 - b2)))
                .collect()
        }
        Family::Spikes => {
            let sigma = rng.gen_range(0.03..0.045) * period;
            let scale = rng.gen_range(0.5..2.0) * sigma * sigma;
            let center = point(&mut rng);
            let weight = gaussian_weight(dim, sigma, period);
            shifted_series(dim, kmax, period, center, |r| scale * r * r * weight(r))
        }
    };
    let rule = if rng.gen_bool(0.5) {
        SplitRule::HeightThreshold { quantile: rng.gen_range(0.5..0.95) }
    } else {
        let count = rng.gen_range(3..=6);
        let boxes = (0..count)
            .map(|_| {
                let lo = [rng.gen::<f64>(), rng.gen::<f64>()];
                let size = [rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.4)];
                (lo, size)
            })
            .collect();
        SplitRule::RandomMask { boxes }
    };
    Ok((family, rule, FourierField { modes }))
}

pub fn generate_item(spec: &GridSpec, corpus: &CorpusSpec, id: usize, p1: f64, p2: f64) -> Result<CorpusItem> {
    let (family, rule, series) = draw_item(corpus, spec.dim(), spec.period(), id)?;
    let f = series.evaluate(spec)?;
    let beta = rule.beta(&f)?;
    let hash = field_hash(&f);
    let input = KInput::from_beta(f, beta, p1, p2)?;
    Ok(CorpusItem { id, family, rule, series, input, hash })
}

pub fn gen_corpus(spec: &GridSpec, corpus: &CorpusSpec, p1: f64, p2: f64) -> Result<Vec<CorpusItem>> {
    (0..corpus.items).into_par_iter().map(|id| generate_item(spec, corpus, id, p1, p2)).collect()
}

/// SHA-256 over the grid parameters and the little-endian samples.
pub fn field_hash(f: &GridField) -> String {
    let spec = f.spec();
    let mut hasher = Sha256::new();
    hasher.update((spec.dim() as u32).to_le_bytes());
    hasher.update((spec.points() as u32).to_le_bytes());
    hasher.update(spec.period().to_le_bytes());
    for v in f.samples() {
        hasher.update(v.to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
