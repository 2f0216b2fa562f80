//! Non-tangential (cone) and Hardy–Littlewood maximal functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, HalfSpaceField, TLadder};
use crate::spectral;
use crate::window::{box_max, box_sum};

/// Cone `Γ_x = {(y, t) : |y − x|_∞ ≤ a·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub aperture: f64,
}

impl ConeParams {
    pub fn new(aperture: f64) -> Result<Self> {
        if !(aperture.is_finite() && aperture >= 0.0) {
            return Err(Error::InvalidInput(format!("aperture {aperture} must be non-negative")));
        }
        Ok(Self { aperture })
    }

    /// The textbook aperture `30n`; too wide for the default ladder on a torus.
    pub fn classical(dim: usize) -> Self {
        Self { aperture: 30.0 * dim as f64 }
    }

    /// The cone window at the top of the ladder must stay within half a period.
    pub fn validate(&self, ladder: &TLadder, period: f64) -> Result<()> {
        let window = self.aperture * ladder.t_max();
        if window > 0.5 * period * (1.0 + 1e-12) {
            return Err(Error::ConeTooWide { window, half_period: 0.5 * period });
        }
        Ok(())
    }

    /// Window half-width in cells at height `t`.
    pub fn half_width(&self, t: f64, spacing: f64) -> usize {
        (self.aperture * t / spacing + 1e-9).floor() as usize
    }
}

/// `Nf(x) = max_m max_{|y − x|_∞ ≤ a t_m} |u(y, t_m)|`.
pub fn nontangential_max(u: &HalfSpaceField, cone: &ConeParams) -> Result<GridField> {
    let spec = *u.spec();
    cone.validate(u.ladder(), spec.period())?;
    let h = spec.spacing();
    let per_level: Vec<Vec<f64>> = u
        .levels()
        .par_iter()
        .zip(u.ladder().levels().par_iter())
        .map(|(level, &t)| {
            let abs: Vec<f64> = level.iter().map(|v| v.abs()).collect();
            box_max(&abs, &spec, cone.half_width(t, h))
        })
        .collect();
    let mut out = vec![0.0f64; spec.len()];
    for level in &per_level {
        for (o, &v) in out.iter_mut().zip(level) {
            *o = o.max(v);
        }
    }
    GridField::new(spec, out)
}

/// Dyadic-radius Hardy–Littlewood maximal function of `|f|` over Chebyshev boxes.
pub fn hl_max(f: &GridField) -> GridField {
    let spec = *f.spec();
    let abs: Vec<f64> = f.samples().iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0f64; spec.len()];
    let mut r = 1;
    while r <= spec.points() / 4 {
        let cells = ((2 * r + 1) as f64).powi(spec.dim() as i32);
        for (o, s) in out.iter_mut().zip(box_sum(&abs, &spec, r)) {
            *o = o.max(s / cells);
        }
        r *= 2;
    }
    GridField::new(spec, out).expect("averages of finite samples are finite")
}

/// `‖N(P_t ∗ f)‖_p`, the discrete maximal H^p quasi-norm.
pub fn hp_quasinorm(f: &GridField, p: f64, cone: &ConeParams, ladder: &TLadder) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let u = spectral::poisson_extend(f, ladder)?;
    nontangential_max(&u, cone)?.lp_norm(p)
}
