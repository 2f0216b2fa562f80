//! The λ rule, level sets of the maximal function, the `w`/`v` split and the
//! atomic decomposition of `w`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridMask, GridSpec, HalfSpaceField, KInput, TLadder};
use crate::maximal::{nontangential_max, ConeParams};
use crate::spectral::{self, SynthesisKernels};
use crate::tents::{tent_regions, TentRegions, TentSet};
use crate::whitney::{whitney, DyadicCube, WhitneyCover};

/// Largest admissible number of level sets.
pub const MAX_LEVELS: usize = 64;

/// `λ = (β^{p2} / α^{p1})^{1/(p2 − p1)}`.
pub fn choose_lambda(alpha: f64, beta: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::DegenerateSplit { alpha, beta });
    }
    if !(p2 > p1 && p1 > 0.0) {
        return Err(Error::InvalidInput(format!("need 0 < p1 < p2, got {p1}, {p2}")));
    }
    // in logs to stay finite for extreme ratios
    Ok(((p2 * beta.ln() - p1 * alpha.ln()) / (p2 - p1)).exp())
}

/// Nested super-level sets `A^k = {Nf > 2^k λ}` with their Whitney covers.
#[derive(Debug, Clone)]
pub struct LevelSets {
    pub lambda: f64,
    /// Non-empty masks `A^0 ⊇ A^1 ⊇ … ⊇ A^K`.
    pub masks: Vec<GridMask>,
    pub covers: Vec<WhitneyCover>,
}

impl LevelSets {
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Number of non-empty levels `K + 1`.
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn measures(&self) -> Vec<f64> {
        self.masks.iter().map(GridMask::measure).collect()
    }
}

pub fn level_sets(nf: &GridField, lambda: f64) -> Result<LevelSets> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda {lambda} must be positive")));
    }
    let mut masks = Vec::new();
    loop {
        let threshold = lambda * 2f64.powi(masks.len() as i32);
        let mask = nf.mask_where(|v| v > threshold);
        if mask.is_empty() {
            break;
        }
        if masks.is_empty() && mask.is_full() {
            return Err(Error::ImproperSetA);
        }
        if masks.len() == MAX_LEVELS {
            return Err(Error::InvalidInput(format!("more than {MAX_LEVELS} level sets")));
        }
        masks.push(mask);
    }
    let covers = masks.par_iter().map(whitney).collect::<Result<Vec<_>>>()?;
    Ok(LevelSets { lambda, masks, covers })
}

/// `λ^{p1} Σ_k 2^{k p1}|A^k|` and `hⁿ Σ_{A^0} min(Nf, 2^{K+1}λ)^{p1}`.
pub fn layer_cake_sides(nf: &GridField, sets: &LevelSets, p1: f64) -> (f64, f64) {
    let lambda = sets.lambda;
    let lhs: f64 = sets
        .masks
        .iter()
        .enumerate()
        .map(|(k, mask)| (2f64.powi(k as i32) * lambda).powf(p1) * mask.measure())
        .sum();
    let cap = 2f64.powi(sets.len() as i32) * lambda;
    let rhs = match sets.masks.first() {
        Some(top) => {
            let spec = nf.spec();
            spec.cell_volume()
                * nf.samples()
                    .iter()
                    .zip(top.cells())
                    .filter(|(_, &inside)| inside)
                    .map(|(&v, _)| v.min(cap).powf(p1))
                    .sum::<f64>()
        }
        None => 0.0,
    };
    (lhs, rhs)
}

/// The layer-cake constant `2^{p1} / (2^{p1} − 1)`.
pub fn layer_cake_constant(p1: f64) -> f64 {
    let q = 2f64.powf(p1);
    q / (q - 1.0)
}

/// One piece `g_{j,k}` of `w`, stored on the cells of `2Q_j^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub k: usize,
    pub j: usize,
    pub cube: DyadicCube,
    /// Cells of `2Q`, in the cube's row-major order.
    pub support: Vec<usize>,
    /// `g` on `support`.
    pub values: Vec<f64>,
    /// Largest `|g|` outside `2Q` (zero for a valid atom).
    pub outside_max: f64,
    /// `λ_j^k = ‖g‖₂ |2Q|^{1/p1 − 1/2}`.
    pub coefficient: f64,
    pub l2: f64,
}

impl Atom {
    pub fn g(&self, spec: &GridSpec) -> GridField {
        let mut samples = vec![0.0; spec.len()];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            samples[i] = v;
        }
        GridField::from_raw(*spec, samples)
    }

    /// `a = g / λ_j^k`.
    pub fn normalized(&self, spec: &GridSpec) -> GridField {
        self.g(spec).scale(1.0 / self.coefficient)
    }
}

fn synthesize_cells(
    dtu: &HalfSpaceField,
    cells: &[(usize, usize)],
    kernels: &SynthesisKernels,
) -> Vec<f64> {
    let spec = dtu.spec();
    let weights = dtu.ladder().weights();
    let mut out = vec![0.0; spec.len()];
    for &(m, idx) in cells {
        let source = weights[m] * dtu.level(m)[idx];
        let c = spec.coords(idx);
        for &(a, b, k) in kernels.stencil(m) {
            out[spec.index_wrapped([c[0] as i64 + a, c[1] as i64 + b])] += source * k;
        }
    }
    out
}

/// Atoms `g_{j,k} = ∫_{T_j^k} ∂_t u ψ_t` with L²-exact coefficients; zero pieces are dropped.
pub fn atoms(
    dtu: &HalfSpaceField,
    regions: &TentRegions,
    p1: f64,
    kernels: &SynthesisKernels,
) -> Result<Vec<Atom>> {
    regions.check_partition()?;
    let spec = *dtu.spec();
    let built: Vec<Option<Atom>> = regions
        .pieces
        .par_iter()
        .map(|piece| {
            if piece.cells.is_empty() {
                return None;
            }
            let dense = synthesize_cells(dtu, &piece.cells, kernels);
            let support = piece.cube.dilated_cells(&spec);
            let mut inside = vec![false; spec.len()];
            for &i in &support {
                inside[i] = true;
            }
            let outside_max = dense
                .iter()
                .zip(&inside)
                .filter(|(_, &c)| !c)
                .map(|(v, _)| v.abs())
                .fold(0.0, f64::max);
            let values: Vec<f64> = support.iter().map(|&i| dense[i]).collect();
            let l2 = (spec.cell_volume() * dense.iter().map(|v| v * v).sum::<f64>()).sqrt();
            if l2 == 0.0 {
                return None;
            }
            let coefficient = l2 * piece.cube.dilated_measure(&spec).powf(1.0 / p1 - 0.5);
            Some(Atom {
                k: piece.k,
                j: piece.j,
                cube: piece.cube,
                support,
                values,
                outside_max,
                coefficient,
                l2,
            })
        })
        .collect();
    Ok(built.into_iter().flatten().collect())
}

/// `Σ_{j,k} g_{j,k}` in `(k, j)` order.
pub fn atom_sum(atoms: &[Atom], spec: &GridSpec) -> GridField {
    let mut samples = vec![0.0; spec.len()];
    for atom in atoms {
        for (&i, &v) in atom.support.iter().zip(&atom.values) {
            samples[i] += v;
        }
    }
    GridField::from_raw(*spec, samples)
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    pub ladder: TLadder,
    pub cone: ConeParams,
    /// Replaces the λ rule.
    pub lambda: Option<f64>,
    /// Replaces the level sets computed from `Nf` (fixes the regions).
    pub level_sets: Option<LevelSets>,
    pub build_atoms: bool,
}

impl SplitConfig {
    pub fn new(ladder: TLadder, cone: ConeParams) -> Self {
        Self { ladder, cone, lambda: None, level_sets: None, build_atoms: true }
    }
}

/// Scalar summary of one split, serialized as a flat JSON object.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub p1: f64,
    pub p2: f64,
    pub degenerate: bool,
    pub nf_max: f64,
    pub level_count: usize,
    pub level_measures: Vec<f64>,
    pub tent_cells: usize,
    pub atom_count: usize,
    pub f_l2: f64,
    pub w_l2: f64,
    pub v_l2: f64,
    pub residual_l2: f64,
    pub reconstruction_error: f64,
    pub atom_sum_error: f64,
    pub atom_constant: f64,
    pub layer_cake_lhs: f64,
    pub layer_cake_rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SplitResult {
    pub w: GridField,
    pub v: GridField,
    /// Reproduction defect `ρ = f − S(everything)`, already folded into `v`.
    pub residual: GridField,
    pub atoms: Vec<Atom>,
    pub level_sets: Option<LevelSets>,
    pub regions: Option<TentRegions>,
    pub nf: Option<GridField>,
    pub diagnostics: Diagnostics,
}

/// `f = w + v` with `w` the synthesis over the tents above `A` and `v` the rest.
pub fn split(input: &KInput, config: &SplitConfig) -> Result<SplitResult> {
    input.validate()?;
    let f = &input.f;
    let spec = *f.spec();
    let ladder = &config.ladder;
    ladder.validate(&spec)?;
    config.cone.validate(ladder, spec.period())?;
    let alpha = input.alpha_norm()?;
    let beta = input.beta_norm()?;
    let mut diagnostics = Diagnostics {
        alpha,
        beta,
        p1: input.p1,
        p2: input.p2,
        f_l2: f.lp_norm(2.0)?,
        ..Diagnostics::default()
    };
    let lambda = match config.lambda {
        Some(l) => Ok(l),
        None => choose_lambda(alpha, beta, input.p1, input.p2),
    };
    let trivial = |mut diagnostics: Diagnostics, nf: Option<GridField>| {
        diagnostics.v_l2 = diagnostics.f_l2;
        SplitResult {
            w: GridField::zeros(spec),
            v: f.clone(),
            residual: GridField::zeros(spec),
            atoms: Vec::new(),
            level_sets: None,
            regions: None,
            nf,
            diagnostics,
        }
    };
    let lambda = match lambda {
        Ok(l) => l,
        Err(Error::DegenerateSplit { .. }) => {
            diagnostics.degenerate = true;
            return Ok(trivial(diagnostics, None));
        }
        Err(e) => return Err(e),
    };
    diagnostics.lambda = lambda;

    let u = spectral::poisson_extend(f, ladder)?;
    let nf = nontangential_max(&u, &config.cone)?;
    diagnostics.nf_max = nf.max_abs();
    let sets = match &config.level_sets {
        Some(sets) => sets.clone(),
        None => level_sets(&nf, lambda)?,
    };
    diagnostics.level_count = sets.len();
    diagnostics.level_measures = sets.measures();
    let (lhs, rhs) = layer_cake_sides(&nf, &sets, input.p1);
    diagnostics.layer_cake_lhs = lhs;
    diagnostics.layer_cake_rhs = rhs;
    if sets.is_empty() {
        return Ok(trivial(diagnostics, Some(nf)));
    }

    let dtu = spectral::dt_poisson(f, ladder)?;
    let kernels = SynthesisKernels::new(&spec, ladder, &*spectral::build_psi(&spec)?)?;
    let regions = tent_regions(&sets.masks, &sets.covers, ladder)?;
    let top = regions.top(spec, ladder.len());
    diagnostics.tent_cells = top.count();
    let w = spectral::masked_synthesis(&dtu, &top, &kernels)?;
    let rest = spectral::masked_synthesis(&dtu, &top.complement(), &kernels)?;
    let everything = spectral::masked_synthesis(&dtu, &TentSet::full(spec, ladder.len()), &kernels)?;
    let residual = f.sub(&everything)?;
    let v = rest.add(&residual)?;
    let f_l2 = diagnostics.f_l2.max(f64::MIN_POSITIVE);
    diagnostics.w_l2 = w.lp_norm(2.0)?;
    diagnostics.v_l2 = v.lp_norm(2.0)?;
    diagnostics.residual_l2 = residual.lp_norm(2.0)?;
    diagnostics.reconstruction_error = w.add(&v)?.sub(f)?.lp_norm(2.0)? / f_l2;

    let atoms = if config.build_atoms {
        let atoms = atoms(&dtu, &regions, input.p1, &kernels)?;
        let sum = atom_sum(&atoms, &spec);
        diagnostics.atom_sum_error =
            sum.sub(&w)?.lp_norm(2.0)? / diagnostics.w_l2.max(f64::MIN_POSITIVE);
        diagnostics.atom_constant = atoms
            .iter()
            .map(|a| {
                let cube = a.cube.side(&spec).powi(spec.dim() as i32);
                a.l2 / (cube.sqrt() * 2f64.powi(a.k as i32) * lambda)
            })
            .fold(0.0, f64::max);
        atoms
    } else {
        Vec::new()
    };
    diagnostics.atom_count = atoms.len();
    Ok(SplitResult {
        w,
        v,
        residual,
        atoms,
        level_sets: Some(sets),
        regions: Some(regions),
        nf: Some(nf),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn plane(n: usize) -> GridSpec {
        GridSpec::new(2, n, 1.0).unwrap()
    }

    fn sample_input(spec: GridSpec, p1: f64) -> KInput {
        let f = GridField::from_fn(spec, |x| {
            (2.0 * PI * (x[0] + x[1])).cos()
                + 0.6 * (2.0 * PI * (2.0 * x[0] - x[1])).sin()
                + 0.3 * (2.0 * PI * 4.0 * x[1]).cos()
        });
        let beta = (0..spec.dim())
            .map(|axis| {
                let r = spectral::riesz(&f, axis).unwrap();
                r.map(|v| v.clamp(-0.3, 0.3))
            })
            .collect();
        KInput::from_beta(f, beta, p1, 2.0).unwrap()
    }

    #[test]
    fn lambda_rule() {
        assert!((choose_lambda(1.0, 1.0, 0.8, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let l = choose_lambda(1.0, 2.0, 0.8, 2.0).unwrap();
        assert!((l - 3.174_802_103_936_399).abs() < 1e-12, "{l}");
        let mut previous = f64::INFINITY;
        for beta in [1.0, 0.5, 0.1, 1e-3, 1e-6] {
            let l = choose_lambda(1.0, beta, 0.8, 2.0).unwrap();
            assert!(l < previous);
            previous = l;
        }
        assert!(matches!(choose_lambda(0.0, 1.0, 0.8, 2.0), Err(Error::DegenerateSplit { .. })));
        assert!(matches!(choose_lambda(1.0, 0.0, 0.8, 2.0), Err(Error::DegenerateSplit { .. })));
    }

    #[test]
    fn level_sets_threshold_by_powers_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = plane(32);
        let nf = GridField::new(spec, (0..spec.len()).map(|_| rng.gen_range(0.0..10.0)).collect()).unwrap();
        let sets = level_sets(&nf, 1.3).unwrap();
        for (k, mask) in sets.masks.iter().enumerate() {
            let threshold = 1.3 * 2f64.powi(k as i32);
            for i in 0..spec.len() {
                assert_eq!(mask.get(i), nf.samples()[i] > threshold);
            }
            sets.covers[k].check(mask).unwrap();
        }
        assert!(nf.samples().iter().all(|&v| v <= 1.3 * 2f64.powi(sets.len() as i32)));

        assert!(level_sets(&nf, 11.0).unwrap().is_empty());
        let sets = level_sets(&nf, nf.max_abs() / 2.0).unwrap();
        assert_eq!(sets.len(), 1);
        assert!(matches!(level_sets(&GridField::constant(spec, 2.0), 1.0), Err(Error::ImproperSetA)));
    }

    #[test]
    fn layer_cake_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let spec = plane(16);
            let scale = rng.gen_range(1.0..100.0);
            let nf = GridField::new(spec, (0..spec.len()).map(|_| scale * rng.gen::<f64>().powi(3)).collect())
                .unwrap();
            let p1 = rng.gen_range(0.55..0.99);
            let sets = level_sets(&nf, rng.gen_range(0.01..1.0) * scale).unwrap();
            let (lhs, rhs) = layer_cake_sides(&nf, &sets, p1);
            assert!(lhs <= layer_cake_constant(p1) * rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn split_reconstructs_and_atoms_are_valid() {
        let spec = plane(32);
        let input = sample_input(spec, 0.8);
        let ladder = TLadder::default_for(&spec).unwrap();
        let config = SplitConfig::new(ladder, ConeParams::new(1.0).unwrap());
        let result = split(&input, &config).unwrap();
        let d = &result.diagnostics;
        assert!(d.level_count >= 1, "{d:?}");
        assert!(d.reconstruction_error <= 1e-10);
        assert!(d.atom_sum_error <= 1e-9, "{}", d.atom_sum_error);
        let tol = 1e-10;
        for atom in &result.atoms {
            assert_eq!(atom.outside_max, 0.0);
            let a = atom.normalized(&spec);
            let l2 = a.lp_norm(2.0).unwrap();
            assert!(a.integrate().unwrap().abs() <= 1e-8 * l2);
            let bound = atom.cube.dilated_measure(&spec).powf(0.5 - 1.0 / 0.8);
            assert!(l2 <= bound * (1.0 + tol));
        }
        // w lives on the dilated cubes of A^0
        let sets = result.level_sets.as_ref().unwrap();
        let mut support = vec![false; spec.len()];
        for cube in &sets.covers[0].cubes {
            for i in cube.dilated_cells(&spec) {
                support[i] = true;
            }
        }
        assert!(result.w.samples().iter().zip(&support).all(|(&v, &s)| s || v == 0.0));
        assert!(d.layer_cake_lhs <= layer_cake_constant(0.8) * d.layer_cake_rhs);
    }

    #[test]
    fn empty_level_sets_give_trivial_split() {
        let spec = plane(32);
        let input = sample_input(spec, 0.8);
        let mut config = SplitConfig::new(TLadder::default_for(&spec).unwrap(), ConeParams::new(1.0).unwrap());
        config.lambda = Some(1e6);
        let result = split(&input, &config).unwrap();
        assert_eq!(result.w.max_abs(), 0.0);
        assert_eq!(result.v, input.f);
        assert!(result.atoms.is_empty());
    }

    #[test]
    fn degenerate_alpha_gives_trivial_split() {
        let spec = plane(16);
        let f = GridField::zeros(spec);
        let input = KInput::from_beta(f, vec![GridField::zeros(spec); 2], 0.8, 2.0).unwrap();
        let config = SplitConfig::new(TLadder::default_for(&spec).unwrap(), ConeParams::new(1.0).unwrap());
        let result = split(&input, &config).unwrap();
        assert!(result.diagnostics.degenerate);
        assert_eq!(result.w.max_abs(), 0.0);
    }

    #[test]
    fn split_is_linear_at_fixed_regions() {
        let spec = plane(32);
        let input = sample_input(spec, 0.8);
        let ladder = TLadder::default_for(&spec).unwrap();
        let mut config = SplitConfig::new(ladder, ConeParams::new(1.0).unwrap());
        config.build_atoms = false;
        let first = split(&input, &config).unwrap();
        config.level_sets = first.level_sets.clone();
        let doubled = KInput::new(
            input.f.scale(2.0),
            input.alpha.iter().map(|a| a.scale(2.0)).collect(),
            input.beta.iter().map(|b| b.scale(2.0)).collect(),
            0.8,
            2.0,
        )
        .unwrap();
        let second = split(&doubled, &config).unwrap();
        for (a, b) in [(&first.w, &second.w), (&first.v, &second.v)] {
            let diff = a.scale(2.0).sub(b).unwrap().max_abs();
            assert!(diff <= 1e-12 * b.max_abs().max(1.0));
        }
    }

    #[test]
    fn single_region_gives_one_atom_equal_to_w() {
        let spec = plane(32);
        let input = sample_input(spec, 0.8);
        let ladder = TLadder::default_for(&spec).unwrap();
        let config = SplitConfig::new(ladder.clone(), ConeParams::new(1.0).unwrap());
        let result = split(&input, &config).unwrap();
        let regions = result.regions.unwrap();
        let dtu = spectral::dt_poisson(&input.f, &ladder).unwrap();
        let kernels = SynthesisKernels::new(&spec, &ladder, &spectral::build_psi(&spec).unwrap()).unwrap();
        let dense = synthesize_cells(&dtu, &regions.tents[0].cells(), &kernels);
        let w = result.w.samples();
        let scale = result.w.max_abs();
        assert!(dense.iter().zip(w).all(|(a, b)| (a - b).abs() <= 1e-12 * scale));
    }
}
