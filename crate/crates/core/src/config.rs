//! Run configuration: JSON file, environment overrides and defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusSpec, Family};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, TLadder};
use crate::maximal::ConeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub period: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { dim: 2, points: 128, period: 1.0 }
    }
}

/// Geometric ladder; unset values take the defaults `t_min = h`, `t_max = L/4`.
/// A `ratio` takes precedence over `t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderConfig {
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub ratio: Option<f64>,
    pub count: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self { t_min: None, t_max: None, ratio: None, count: TLadder::DEFAULT_COUNT }
    }
}

impl LadderConfig {
    pub fn build(&self, spec: &GridSpec) -> Result<TLadder> {
        let t_min = self.t_min.unwrap_or(spec.spacing());
        match self.ratio {
            Some(ratio) => TLadder::new(spec, t_min, ratio, self.count),
            None => TLadder::spanning(spec, t_min, self.t_max.unwrap_or(spec.period() / 4.0), self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub families: Vec<Family>,
    pub items: usize,
    pub seed: u64,
    /// Largest `|k_i|`; defaults to `⌊N/3⌋`.
    pub kmax: Option<usize>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { families: Family::ALL.to_vec(), items: 50, seed: 42, kmax: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative L2 bound on `w + v − f`.
    pub reconstruction: f64,
    /// Largest relative change of the corpus-maximal constants under refinement.
    pub refinement_change: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { reconstruction: 1e-10, refinement_change: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub lemma_samples: u64,
    /// Multiplier in the scalar lemma bound (2 in the lemma itself).
    pub lemma_factor: f64,
    /// Majorization exponent checked as blocking.
    pub delta: f64,
    /// Exponent below the proven range, run as report-only (two dimensions only).
    pub exploratory_delta: f64,
    /// Number of items (from the start of the corpus) given the divergence check.
    pub ball_items: usize,
    pub ball_samples: usize,
    /// Run the grid-refinement study.
    pub refinement: bool,
    /// Coarse grid of the refinement study; the fine grid doubles it.
    pub refinement_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            lemma_samples: 1_000_000,
            lemma_factor: 2.0,
            delta: 0.5,
            exploratory_delta: 0.1,
            ball_items: 6,
            ball_samples: 8,
            refinement: true,
            refinement_points: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub ladder: LadderConfig,
    pub aperture: f64,
    pub p1: f64,
    pub p2: f64,
    pub corpus: CorpusConfig,
    pub tolerances: Tolerances,
    pub checks: CheckConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            ladder: LadderConfig::default(),
            aperture: 1.0,
            p1: 0.8,
            p2: 2.0,
            corpus: CorpusConfig::default(),
            tolerances: Tolerances::default(),
            checks: CheckConfig::default(),
            output_dir: PathBuf::from("kclosed-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `KCLOSED_SEED` and `KCLOSED_OUT`.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_overrides(std::env::var("KCLOSED_SEED").ok(), std::env::var("KCLOSED_OUT").ok())
    }

    fn apply_overrides(&mut self, seed: Option<String>, out: Option<String>) -> Result<()> {
        if let Some(seed) = seed {
            self.corpus.seed =
                seed.trim().parse().map_err(|_| Error::Config(format!("KCLOSED_SEED {seed:?} is not a u64")))?;
        }
        if let Some(out) = out {
            self.output_dir = PathBuf::from(out);
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.points, self.grid.period)
    }

    pub fn ladder(&self) -> Result<TLadder> {
        self.ladder.build(&self.spec()?)
    }

    pub fn cone(&self) -> Result<ConeParams> {
        ConeParams::new(self.aperture)
    }

    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            families: self.corpus.families.clone(),
            items: self.corpus.items,
            seed: self.corpus.seed,
            kmax: self.corpus.kmax.unwrap_or(self.grid.points / 3),
        }
    }

    /// Checks everything that can be checked before a run.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec()?;
        let ladder = self.ladder()?;
        self.cone()?.validate(&ladder, spec.period())?;
        if !(self.p1 > 0.0 && self.p1 < 1.0) || !(self.p2 > self.p1) || !self.p2.is_finite() {
            return Err(Error::InvalidExponent(if self.p1 > 0.0 && self.p1 < 1.0 { self.p2 } else { self.p1 }));
        }
        let corpus = self.corpus_spec();
        if corpus.families.is_empty() {
            return Err(Error::Config("corpus needs at least one family".into()));
        }
        if corpus.kmax == 0 || 2 * corpus.kmax >= spec.points() {
            return Err(Error::Config(format!("kmax {} not resolved on {} points", corpus.kmax, spec.points())));
        }
        if self.checks.refinement && (self.checks.refinement_points < 16 || !self.checks.refinement_points.is_power_of_two()) {
            return Err(Error::Config("refinement_points must be a power of two >= 16".into()));
        }
        Ok(())
    }
}
