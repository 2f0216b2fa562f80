use std::f64::consts::PI;

use kclosed::config::RunConfig;
use kclosed::decompose::{split, LevelSets, SplitConfig};
use kclosed::maximal::ConeParams;
use kclosed::runner;
use kclosed::spectral::build_psi;
use kclosed::verify;
use kclosed::whitney::{DyadicCube, WhitneyCover};
use kclosed::{GridField, GridMask, GridSpec, KInput, TLadder};
use rayon::prelude::*;

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn kernel_normalization_matches_quadrature_oracle() {
    // 1/∫φ(x)(1/(1 + x₁²/4) − 1/(1 + x₁²))dx by adaptive quadrature
    for (dim, oracle) in [(1, 167.72390718777348), (2, 381.753_652_221_033_2)] {
        let spec = GridSpec::new(dim, 16, 1.0).unwrap();
        let c = build_psi(&spec).unwrap().normalization();
        assert!(relative(c, oracle) < 1e-8, "dim {dim}: {c} vs {oracle}");
    }
}

#[test]
fn first_trig_item_hash_is_frozen() {
    let config = RunConfig::default();
    let spec = config.spec().unwrap();
    let item = kclosed::corpus::generate_item(&spec, &config.corpus_spec(), 0, config.p1, config.p2).unwrap();
    assert_eq!(item.family.name(), "trig");
    assert_eq!(item.hash, "493ffe1e802f8a18ff490f7bebd46445d56cf780537c05b35afe4c3d1c71227a");
}

/// A single mode with `β = 0` and `p2` close to `p1`: `λ` drops below most of `Nf`.
#[test]
fn constructed_instance_has_nearly_full_level_set() {
    let spec = GridSpec::new(2, 64, 1.0).unwrap();
    let ladder = TLadder::default_for(&spec).unwrap();
    let f = GridField::from_fn(spec, |x| (2.0 * PI * 2.0 * x[0]).cos());
    let input = KInput::from_beta(f, vec![GridField::zeros(spec); 2], 0.8, 1.3).unwrap();
    let result = split(&input, &SplitConfig::new(ladder, ConeParams::new(1.0).unwrap())).unwrap();
    let d = &result.diagnostics;
    assert!(d.level_measures[0] >= 0.9);
    assert_eq!(d.level_measures[0], 0.9375);
    // α = 1 since |(f, R₁f, R₂f)| = 1, so λ = (mean |f|^{1.3})^{1/0.5}
    assert!(relative(d.lambda, 0.3412556383351795) < 1e-9, "{}", d.lambda);
    assert!(d.reconstruction_error <= 1e-12);
}

/// `sup |u|` and `sup t|∇u|` over the tent boundary, scaled by `2λ`.
const ONE_CUBE: [f64; 2] = [0.857699661421619, 0.411217160262396];

#[test]
fn one_cube_tent_boundary_constants() {
    let spec = GridSpec::new(2, 64, 1.0).unwrap();
    let ladder = TLadder::default_for(&spec).unwrap();
    let f = GridField::from_fn(spec, |x| (2.0 * PI * x[0]).cos() + 0.5 * (2.0 * PI * x[1]).sin());
    let input = KInput::from_beta(f, vec![GridField::zeros(spec); 2], 0.8, 2.0).unwrap();
    let cube = DyadicCube { level: 4, anchor: [16, 16] };
    let mut cells = vec![false; spec.len()];
    for c in cube.cells(&spec) {
        cells[c] = true;
    }
    let sets = LevelSets {
        lambda: 0.5,
        masks: vec![GridMask::new(spec, cells).unwrap()],
        covers: vec![WhitneyCover { cubes: vec![cube] }],
    };
    let mut config = SplitConfig::new(ladder.clone(), ConeParams::new(1.0).unwrap());
    config.lambda = Some(0.5);
    config.level_sets = Some(sets);
    let result = split(&input, &config).unwrap();
    assert_eq!(result.atoms.len(), 1);
    let report = verify::boundary_diagnostics(&input.f, &ladder, &result, 0).unwrap();
    let u = report.get("u_over_level").unwrap();
    let g = report.get("t_grad_over_level").unwrap();
    assert!(relative(u, ONE_CUBE[0]) < 1e-9, "{u}");
    assert!(relative(g, ONE_CUBE[1]) < 1e-9, "{g}");
}

#[test]
fn corpus_domination_and_v_norm_maxima_are_frozen() {
    let config = RunConfig::default();
    let ladder = config.ladder().unwrap();
    let cone = config.cone().unwrap();
    let items = runner::build_corpus(&config).unwrap();
    let values: Vec<(f64, f64)> = items
        .par_iter()
        .map(|item| {
            let dom = verify::maximal_domination_check(&item.input, &ladder, &cone, 0.5, 0).unwrap();
            let (result, _) = runner::decompose_item(item, &ladder, &cone).unwrap();
            let v = verify::v_norm_check(&item.input, &result, &ladder, 0).unwrap();
            (dom.get("implied_constant").unwrap(), v.get("v_over_beta").unwrap())
        })
        .collect();
    let dom = values.iter().map(|v| v.0).fold(0.0, f64::max);
    let v_over_beta = values.iter().map(|v| v.1).fold(0.0, f64::max);
    assert!(relative(dom, 2.0101599027561154) < 1e-6, "{dom}");
    assert!(relative(v_over_beta, 1.4464848069122715) < 1e-6, "{v_over_beta}");
}
