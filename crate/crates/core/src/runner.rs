//! End-to-end pipelines behind the command-line tool.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{self, CorpusItem, CorpusSpec, SplitRule};
use crate::decompose::{layer_cake_constant, split, SplitConfig, SplitResult};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, TLadder};
use crate::io::{read_field, write_field, write_field_csv, write_json};
use crate::maximal::ConeParams;
use crate::verify::{self, LemmaSampling, Report, Status};

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: usize,
    pub family: String,
    pub split_rule: String,
    pub hash: String,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub degenerate: bool,
    pub level_count: usize,
    /// `|A^k|` separated by `;`.
    pub level_measures: String,
    pub atom_count: usize,
    pub c_w: f64,
    pub c_w_atomic: f64,
    pub c_v: f64,
    pub residual_l2: f64,
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    id: usize,
    family: String,
    rule: SplitRule,
    hash: String,
}

fn item_dir(out: &Path, id: usize) -> PathBuf {
    out.join("items").join(format!("item_{id:03}"))
}

fn manifest(item: &CorpusItem) -> Manifest {
    Manifest { id: item.id, family: item.family.to_string(), rule: item.rule.clone(), hash: item.hash.clone() }
}

pub fn build_corpus(config: &RunConfig) -> Result<Vec<CorpusItem>> {
    config.validate()?;
    corpus::gen_corpus(&config.spec()?, &config.corpus_spec(), config.p1, config.p2)
}

/// Writes `f` and `β_i` of every item plus `corpus.json`.
pub fn gen_corpus(config: &RunConfig) -> Result<Vec<CorpusItem>> {
    let items = build_corpus(config)?;
    let out = &config.output_dir;
    for item in &items {
        let dir = item_dir(out, item.id);
        fs::create_dir_all(&dir)?;
        write_field(&dir.join("f.hsf"), &item.input.f)?;
        for (i, b) in item.input.beta.iter().enumerate() {
            write_field(&dir.join(format!("beta_{}.hsf", i + 1)), b)?;
        }
    }
    write_json(&out.join("corpus.json"), &items.iter().map(manifest).collect::<Vec<_>>())?;
    Ok(items)
}

/// Split and score one input.
pub fn decompose_item(item: &CorpusItem, ladder: &TLadder, cone: &ConeParams) -> Result<(SplitResult, Report)> {
    let result = split(&item.input, &SplitConfig::new(ladder.clone(), *cone))?;
    let verdict = verify::kclosed_verdict(&item.input, &result, cone, ladder, item.id as u64)?;
    Ok((result, verdict))
}

fn summary_row(item: &CorpusItem, result: &SplitResult, verdict: &Report) -> SummaryRow {
    let d = &result.diagnostics;
    let measures: Vec<String> = d.level_measures.iter().map(f64::to_string).collect();
    SummaryRow {
        id: item.id,
        family: item.family.to_string(),
        split_rule: item.rule.name().to_string(),
        hash: item.hash.clone(),
        alpha: d.alpha,
        beta: d.beta,
        lambda: d.lambda,
        degenerate: d.degenerate,
        level_count: d.level_count,
        level_measures: measures.join(";"),
        atom_count: d.atom_count,
        c_w: verdict.get("c_w").unwrap_or(f64::NAN),
        c_w_atomic: verdict.get("c_w_atomic").unwrap_or(f64::NAN),
        c_v: verdict.get("c_v").unwrap_or(f64::NAN),
        residual_l2: d.residual_l2,
        reconstruction_error: verdict.get("reconstruction_error").unwrap_or(f64::NAN),
    }
}

fn write_item(dir: &Path, item: &CorpusItem, result: &SplitResult, verdict: &Report) -> Result<()> {
    fs::create_dir_all(dir)?;
    let spec = *item.input.f.spec();
    write_field(&dir.join("f.hsf"), &item.input.f)?;
    write_field(&dir.join("w.hsf"), &result.w)?;
    write_field(&dir.join("v.hsf"), &result.v)?;
    write_field(&dir.join("residual.hsf"), &result.residual)?;
    for (i, (a, b)) in item.input.alpha.iter().zip(&item.input.beta).enumerate() {
        write_field(&dir.join(format!("alpha_{}.hsf", i + 1)), a)?;
        write_field(&dir.join(format!("beta_{}.hsf", i + 1)), b)?;
    }
    if let Some(nf) = &result.nf {
        write_field(&dir.join("nf.hsf"), nf)?;
    }
    let mut atoms = csv::Writer::from_path(dir.join("atoms.csv"))?;
    atoms.write_record(["k", "j", "cube_level", "anchor_0", "anchor_1", "side", "support_cells", "coefficient", "l2", "outside_max"])?;
    for a in &result.atoms {
        atoms.write_record([
            a.k.to_string(),
            a.j.to_string(),
            a.cube.level.to_string(),
            a.cube.anchor[0].to_string(),
            a.cube.anchor[1].to_string(),
            a.cube.side(&spec).to_string(),
            a.support.len().to_string(),
            a.coefficient.to_string(),
            a.l2.to_string(),
            a.outside_max.to_string(),
        ])?;
    }
    atoms.flush()?;
    write_json(
        &dir.join("diagnostics.json"),
        &serde_json::json!({
            "item": manifest(item),
            "diagnostics": result.diagnostics,
            "verdict": verdict,
        }),
    )
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Decomposes the corpus, writing per-item fields, atoms and diagnostics and
/// a `summary.csv` whose content depends only on the configuration.
pub fn run_decompose(config: &RunConfig) -> Result<Vec<SummaryRow>> {
    let items = build_corpus(config)?;
    let ladder = config.ladder()?;
    let cone = config.cone()?;
    let out = &config.output_dir;
    fs::create_dir_all(out)?;
    let rows = items
        .par_iter()
        .map(|item| {
            let (result, verdict) = decompose_item(item, &ladder, &cone)?;
            write_item(&item_dir(out, item.id), item, &result, &verdict)?;
            log::info!("item {} decomposed: {} atoms", item.id, result.atoms.len());
            Ok(summary_row(item, &result, &verdict))
        })
        .collect::<Result<Vec<_>>>()?;
    write_summary(&out.join("summary.csv"), &rows)?;
    Ok(rows)
}

/// A check's per-item reports folded into one: the worst status and the
/// largest value of every constant.
pub fn aggregate(name: &str, reports: &[Report], seed: u64) -> Report {
    let mut out = Report::new(name, reports.iter().map(|r| r.samples).sum(), seed);
    let fails = reports.iter().filter(|r| r.is_blocking_failure()).count();
    out.status = if fails > 0 {
        Status::Fail
    } else if reports.iter().any(|r| r.status == Status::Pass) {
        Status::Pass
    } else {
        Status::ReportOnly
    };
    for r in reports {
        for (k, &v) in &r.constants {
            let entry = out.constants.entry(k.clone()).or_insert(f64::NEG_INFINITY);
            if v > *entry || v.is_nan() {
                *entry = v;
            }
        }
    }
    out.set("items", reports.len() as f64).set("failed_items", fails as f64);
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemReport {
    pub item: usize,
    pub report: Report,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Report>,
    /// `check_name` or `check_name/item` of every blocking failure.
    pub failures: Vec<String>,
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn layer_cake_report(result: &SplitResult, p1: f64, seed: u64) -> Report {
    let d = &result.diagnostics;
    let mut report = Report::new("layer-cake", 1, seed);
    if d.level_count == 0 {
        report.status = Status::ReportOnly;
        return report;
    }
    let c = layer_cake_constant(p1);
    report
        .set("lhs", d.layer_cake_lhs)
        .set("rhs", d.layer_cake_rhs)
        .set("constant", c)
        .require(d.layer_cake_lhs <= c * d.layer_cake_rhs * (1.0 + 1e-12));
    report
}

fn atom_report(result: &SplitResult, seed: u64) -> Report {
    let d = &result.diagnostics;
    let outside = result.atoms.iter().map(|a| a.outside_max).fold(0.0, f64::max);
    let mut report = Report::new("atoms", result.atoms.len() as u64, seed);
    report
        .set("outside_support_max", outside)
        .set("atom_sum_error", d.atom_sum_error)
        .set("atom_constant", d.atom_constant)
        .require(outside == 0.0 && d.atom_sum_error <= 1e-10 && d.atom_constant.is_finite());
    report
}

fn reproduction_report(result: &SplitResult, seed: u64) -> Report {
    let d = &result.diagnostics;
    let mut report = Report::new("reproduction", 1, seed);
    report.status = Status::ReportOnly;
    report.set("relative_defect", if d.f_l2 > 0.0 { d.residual_l2 / d.f_l2 } else { 0.0 });
    report
}

/// All per-item checks of one corpus item.
pub fn verify_item(item: &CorpusItem, config: &RunConfig, ladder: &TLadder, cone: &ConeParams) -> Result<(SummaryRow, Vec<Report>)> {
    let seed = item.id as u64;
    let input = &item.input;
    let (result, verdict) = decompose_item(item, ladder, cone)?;
    let row = summary_row(item, &result, &verdict);
    let checks = &config.checks;
    let mut reports = vec![verdict];
    reports.push(verify::majorization_check(input, ladder, checks.delta, seed)?);
    if input.dim() == 2 {
        let mut exploratory = verify::majorization_check(input, ladder, checks.exploratory_delta, seed)?;
        exploratory.check_name = "majorization-exploratory".into();
        exploratory.status = Status::ReportOnly;
        reports.push(exploratory);
    }
    reports.push(verify::maximal_domination_check(input, ladder, cone, checks.delta, seed)?);
    reports.push(verify::measure_bound_check(input, &result, seed));
    reports.push(verify::green_identity_check(&input.f, ladder, seed)?);
    if item.id < checks.ball_items {
        reports.push(verify::ball_divergence_check(&input.f, ladder, checks.ball_samples, seed)?);
    }
    let mut boundary = verify::boundary_diagnostics(&input.f, ladder, &result, seed)?;
    boundary.status = Status::ReportOnly;
    reports.push(boundary);
    reports.push(verify::v_norm_check(input, &result, ladder, seed)?);
    reports.push(layer_cake_report(&result, input.p1, seed));
    reports.push(atom_report(&result, seed));
    reports.push(reproduction_report(&result, seed));
    for r in &mut reports {
        if r.check_name == "k-closedness" {
            let recon = r.get("reconstruction_error").unwrap_or(f64::INFINITY);
            r.require(recon <= config.tolerances.reconstruction);
        }
    }
    Ok((row, reports))
}

/// Corpus maxima of the verdict constants at one resolution.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ResolutionMaxima {
    pub points: usize,
    pub c_w: f64,
    pub c_w_atomic: f64,
    pub c_v: f64,
    pub maximal_domination: f64,
    pub boundary_u: f64,
    pub boundary_t_grad: f64,
}

fn resolution_maxima(config: &RunConfig, spec: &GridSpec, ladder: &TLadder, corpus: &CorpusSpec) -> Result<ResolutionMaxima> {
    let cone = config.cone()?;
    let items = corpus::gen_corpus(spec, corpus, config.p1, config.p2)?;
    let per_item = items
        .par_iter()
        .map(|item| {
            let (result, verdict) = decompose_item(item, ladder, &cone)?;
            let dom = verify::maximal_domination_check(&item.input, ladder, &cone, config.checks.delta, 0)?;
            let boundary = verify::boundary_diagnostics(&item.input.f, ladder, &result, 0)?;
            Ok([
                verdict.get("c_w").unwrap_or(f64::NAN),
                verdict.get("c_w_atomic").unwrap_or(f64::NAN),
                verdict.get("c_v").unwrap_or(f64::NAN),
                dom.get("implied_constant").unwrap_or(0.0),
                boundary.get("u_over_level").unwrap_or(0.0),
                boundary.get("t_grad_over_level").unwrap_or(0.0),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let max = |k: usize| per_item.iter().map(|v| v[k]).fold(0.0, f64::max);
    Ok(ResolutionMaxima {
        points: spec.points(),
        c_w: max(0),
        c_w_atomic: max(1),
        c_v: max(2),
        maximal_domination: max(3),
        boundary_u: max(4),
        boundary_t_grad: max(5),
    })
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else {
        (fine - coarse).abs() / coarse.abs().max(fine.abs())
    }
}

/// The corpus at `N` and `2N` on one physical ladder (`t_min = L/N`) and one
/// band limit (`⌊N/3⌋`); blocking on the verdict constants only.
pub fn refinement_study(config: &RunConfig) -> Result<(Report, ResolutionMaxima, ResolutionMaxima)> {
    let n = config.checks.refinement_points;
    let period = config.grid.period;
    let coarse_spec = GridSpec::new(config.grid.dim, n, period)?;
    let fine_spec = coarse_spec.refined(2)?;
    let mut corpus = config.corpus_spec();
    corpus.kmax = n / 3;
    let t_min = period / n as f64;
    let coarse_ladder = TLadder::spanning(&coarse_spec, t_min, period / 4.0, config.ladder.count)?;
    let fine_ladder = TLadder::spanning(&fine_spec, t_min, period / 4.0, config.ladder.count)?;
    let coarse = resolution_maxima(config, &coarse_spec, &coarse_ladder, &corpus)?;
    let fine = resolution_maxima(config, &fine_spec, &fine_ladder, &corpus)?;
    let tol = config.tolerances.refinement_change;
    let mut report = Report::new("refinement", corpus.items as u64, corpus.seed);
    let mut ok = true;
    for (name, c, f, blocking) in [
        ("c_w", coarse.c_w, fine.c_w, true),
        ("c_w_atomic", coarse.c_w_atomic, fine.c_w_atomic, true),
        ("c_v", coarse.c_v, fine.c_v, true),
        ("maximal_domination", coarse.maximal_domination, fine.maximal_domination, false),
        ("boundary_u", coarse.boundary_u, fine.boundary_u, false),
        ("boundary_t_grad", coarse.boundary_t_grad, fine.boundary_t_grad, false),
    ] {
        let change = relative_change(c, f);
        report.set(&format!("{name}_change"), change);
        if blocking {
            ok &= change <= tol;
        }
    }
    report.set("tolerance", tol).require(ok);
    Ok((report, coarse, fine))
}

/// Runs every check, writes `verify/verdict.json`, `verify/reports.json` and
/// plot CSVs, and returns the verdict.
pub fn run_verify(config: &RunConfig) -> Result<Verdict> {
    let items = build_corpus(config)?;
    let ladder = config.ladder()?;
    let cone = config.cone()?;
    let out = config.output_dir.join("verify");
    fs::create_dir_all(&out)?;
    let seed = config.corpus.seed;

    let lemma = verify::scalar_lemma_suite(config.checks.lemma_samples, seed, config.checks.lemma_factor, LemmaSampling::LogUniform);
    let lemma_strict = {
        let mut r = verify::scalar_lemma_suite(config.checks.lemma_samples / 10, seed, config.checks.lemma_factor, LemmaSampling::NearEquality);
        r.check_name = "scalar-lemma-near-equality".into();
        r
    };

    let per_item = items
        .par_iter()
        .map(|item| verify_item(item, config, &ladder, &cone))
        .collect::<Result<Vec<_>>>()?;

    let mut failures = Vec::new();
    let mut by_name: BTreeMap<String, Vec<Report>> = BTreeMap::new();
    let mut item_reports = Vec::new();
    let mut rows = Vec::new();
    for ((row, reports), item) in per_item.into_iter().zip(&items) {
        rows.push(row);
        for r in reports {
            if r.is_blocking_failure() {
                failures.push(format!("{}/{}", r.check_name, item.id));
            }
            by_name.entry(r.check_name.clone()).or_default().push(r.clone());
            item_reports.push(ItemReport { item: item.id, report: r });
        }
    }
    let mut checks = vec![lemma, lemma_strict];
    checks.extend(by_name.iter().map(|(name, reports)| aggregate(name, reports, seed)));
    if config.checks.refinement {
        let (report, coarse, fine) = refinement_study(config)?;
        let mut w = csv::Writer::from_path(out.join("refinement.csv"))?;
        w.serialize(&coarse)?;
        w.serialize(&fine)?;
        w.flush()?;
        checks.push(report);
    }
    for c in &checks {
        if c.is_blocking_failure() && !by_name.contains_key(&c.check_name) {
            failures.push(c.check_name.clone());
        }
    }
    let verdict = Verdict { passed: failures.is_empty(), checks, failures };

    write_json(&out.join("verdict.json"), &verdict)?;
    write_json(&out.join("reports.json"), &item_reports)?;
    write_summary(&out.join("constants.csv"), &rows)?;
    let mut levels = csv::Writer::from_path(out.join("level_measures.csv"))?;
    levels.write_record(["id", "k", "measure"])?;
    for row in &rows {
        for (k, m) in row.level_measures.split(';').filter(|s| !s.is_empty()).enumerate() {
            levels.write_record([row.id.to_string(), k.to_string(), m.to_string()])?;
        }
    }
    levels.flush()?;
    if let Some(first) = items.first() {
        write_field_csv(&out.join("f_item0.csv"), &first.input.f)?;
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportSummary {
    pub items: usize,
    pub max_reconstruction_error: f64,
    pub passed: bool,
}

/// Re-reads a decomposition directory and re-checks `w + v = f` per item.
pub fn run_report(out: &Path, tolerance: f64) -> Result<ReportSummary> {
    let items_dir = out.join("items");
    let mut dirs: Vec<PathBuf> = fs::read_dir(&items_dir)
        .map_err(|e| Error::Config(format!("{}: {e}", items_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("w.hsf").exists())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::Config(format!("no decomposed items under {}", items_dir.display())));
    }
    let mut worst = 0.0f64;
    for dir in &dirs {
        let f = read_field(&dir.join("f.hsf"))?;
        let w = read_field(&dir.join("w.hsf"))?;
        let v = read_field(&dir.join("v.hsf"))?;
        let err = w.add(&v)?.sub(&f)?.lp_norm(2.0)? / f.lp_norm(2.0)?.max(f64::MIN_POSITIVE);
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    Ok(ReportSummary { items: dirs.len(), max_reconstruction_error: worst, passed: worst <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> RunConfig {
        let mut config = RunConfig::default();
        config.grid.points = 32;
        config.corpus.items = 3;
        config.checks.lemma_samples = 2000;
        config.checks.ball_items = 1;
        config.checks.ball_samples = 2;
        config.checks.refinement = false;
        config.output_dir = dir.to_path_buf();
        config
    }

    #[test]
    fn decompose_is_deterministic_and_reportable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_decompose(&small(a.path())).unwrap();
        run_decompose(&small(b.path())).unwrap();
        let sa = fs::read(a.path().join("summary.csv")).unwrap();
        let sb = fs::read(b.path().join("summary.csv")).unwrap();
        assert_eq!(sa, sb);
        let summary = run_report(a.path(), 1e-10).unwrap();
        assert_eq!(summary.items, 3);
        assert!(summary.passed, "{summary:?}");
        assert!(item_dir(a.path(), 0).join("atoms.csv").exists());
    }

    #[test]
    fn verify_writes_verdict() {
        let dir = tempfile::tempdir().unwrap();
        let verdict = run_verify(&small(dir.path())).unwrap();
        assert!(dir.path().join("verify/verdict.json").exists());
        assert!(verdict.passed, "{:?}", verdict.failures);
        assert_eq!(verdict.exit_code(), 0);
    }

    #[test]
    fn forced_lemma_failure_fails_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small(dir.path());
        config.checks.lemma_factor = 0.9;
        config.corpus.items = 1;
        let verdict = run_verify(&config).unwrap();
        assert!(!verdict.passed);
        assert!(verdict.failures.iter().any(|f| f.starts_with("scalar-lemma")));
        assert_eq!(verdict.exit_code(), 1);
    }

    #[test]
    fn aggregate_takes_worst() {
        let mut a = Report::new("x", 1, 0);
        a.set("c", 1.0);
        let mut b = Report::new("x", 2, 0);
        b.set("c", 3.0).require(false);
        let agg = aggregate("x", &[a, b], 0);
        assert_eq!(agg.status, Status::Fail);
        assert_eq!(agg.get("c"), Some(3.0));
        assert_eq!(agg.samples, 3);
    }
}
