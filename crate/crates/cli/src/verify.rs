//! Verification suites: each check is a plain function returning a named pass/fail
//! with details, and `cmd_verify` runs them all.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use sbmclique::ld::{corr_bound, enumerate_templates, exhaustive_correlation, gram_report, single_template_check, LdContext, Template};
use sbmclique::num::mean_sd;
use sbmclique::oracles::brute_moments;
use sbmclique::oracles::{check_condition_equivalence, clique_mean, clique_var_bounds, kappa_m, regime_report, signal1_checks, var_bounds_unchecked, w_m};
use sbmclique::sbm::{sample_assignment, sample_graph_rows};
use sbmclique::{center_adjacency, clique_stat, Conditioning, Graph, SbmParams};

use crate::config::Opts;
use crate::{emit, to_json, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn result(name: &str, passed: bool, detail: Value) -> CheckResult {
    CheckResult { name: name.into(), passed, detail }
}

/// Multiplier applied to a check's formula side; 1 unless the check is being corrupted.
#[derive(Debug, Clone, Copy)]
pub struct Perturb(pub f64);

impl Perturb {
    pub const NONE: Perturb = Perturb(1.0);
    const CORRUPTED: Perturb = Perturb(1.0 + 1e-3);
}

pub const CHECK_NAMES: [&str; 11] = [
    "constants",
    "oracle_mean",
    "oracle_variance_same",
    "oracle_variance_diff",
    "triangle_fast_path",
    "mean_mc",
    "correlation_single_edge",
    "correlation_exhaustive",
    "gram_near_identity",
    "corr_bound",
    "condition_equivalence",
];

/// κ_3 = 2^{−21}, w_3 = 2√3072 to 1e−12, and the KS spot value 28.57 < 50.
pub fn check_constants(p: Perturb) -> CheckResult {
    let kappa = kappa_m(3) * p.0;
    let w = w_m(3);
    let ks = regime_report(10_000, 50, 5e-4, 1e-2, 3, 2, 14.0, 1.0).ks;
    let ok_k = (kappa - 2f64.powi(-21)).abs() <= 1e-12 * 2f64.powi(-21);
    let ok_w = (w - 2.0 * 3072f64.sqrt()).abs() <= 1e-12;
    let ok_ks = (ks.lhs - 28.57).abs() < 0.005 && ks.holds && ks.rhs == 50.0;
    result(
        "constants",
        ok_k && ok_w && ok_ks,
        json!({"kappa_3": kappa, "w_3": w, "KS_lhs": ks.lhs, "KS_rhs": ks.rhs}),
    )
}

pub const ORACLE_POINTS: [(f64, f64); 3] = [(0.2, 0.3), (0.1, 0.45), (0.5, 0.25)];

/// Exact moments on every (n ∈ 5..=8, K ∈ {2,3}, m ∈ {3,4}, (q,λ)) grid point.
pub struct OracleGrid {
    pub rows: Vec<OracleRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub q: f64,
    pub lambda: f64,
    pub mean_same: f64,
    pub mean_diff: f64,
    pub formula_mean: f64,
    pub var_same: f64,
    pub var_diff: f64,
    /// None outside the hypotheses q ≤ 1/2, q + 2λ ≤ 1, 3 ≤ m ≤ K
    pub bound_same: Option<f64>,
    pub bound_diff: Option<f64>,
    /// the same formulas evaluated without the hypothesis check
    pub bound_same_unchecked: f64,
    pub bound_diff_unchecked: f64,
}

pub fn oracle_grid() -> OracleGrid {
    let mut jobs = Vec::new();
    for n in 5..=8 {
        for k in [2, 3] {
            for m in [3, 4] {
                for &(q, l) in &ORACLE_POINTS {
                    jobs.push((n, k, m, q, l));
                }
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(n, k, m, q, l)| {
            let (mean_same, var_same) = brute_moments(n, k, q, l, m, Conditioning::Same).expect("grid inside budget");
            let (mean_diff, var_diff) = brute_moments(n, k, q, l, m, Conditioning::Diff).expect("grid inside budget");
            let bounds = clique_var_bounds(n, k, q, l, m).ok();
            let (us, ud) = var_bounds_unchecked(n, k, q, l, m).expect("valid arguments");
            OracleRow {
                n,
                k,
                m,
                q,
                lambda: l,
                mean_same,
                mean_diff,
                formula_mean: clique_mean(n, k, l, m).expect("valid arguments"),
                var_same,
                var_diff,
                bound_same: bounds.map(|b| b.0),
                bound_diff: bounds.map(|b| b.1),
                bound_same_unchecked: us,
                bound_diff_unchecked: ud,
            }
        })
        .collect();
    OracleGrid { rows }
}

pub const MEAN_TOL: f64 = 1e-12;

pub fn check_oracle_mean(g: &OracleGrid, p: Perturb) -> CheckResult {
    let bad: Vec<&OracleRow> = g
        .rows
        .iter()
        .filter(|r| {
            let f = r.formula_mean * p.0;
            (r.mean_same - f).abs() > MEAN_TOL * f.abs().max(1.0) || r.mean_diff.abs() > MEAN_TOL
        })
        .collect();
    result("oracle_mean", bad.is_empty(), json!({"points": g.rows.len(), "failures": bad.len(), "first_failure": bad.first()}))
}

fn variance_check(name: &str, g: &OracleGrid, same: bool, p: Perturb) -> CheckResult {
    let pick = |r: &OracleRow| if same { (r.var_same, r.bound_same, r.bound_same_unchecked) } else { (r.var_diff, r.bound_diff, r.bound_diff_unchecked) };
    let inside: Vec<&OracleRow> = g.rows.iter().filter(|r| pick(r).1.is_some()).collect();
    let bad: Vec<&&OracleRow> = inside.iter().filter(|r| {
        let (v, b, _) = pick(r);
        v > b.unwrap() * p.0
    }).collect();
    let outside_exceed = g.rows.iter().filter(|r| pick(r).1.is_none() && pick(r).0 > pick(r).2).count();
    let worst = inside.iter().map(|r| pick(r).0 / pick(r).1.unwrap()).fold(0.0, f64::max);
    result(
        name,
        bad.is_empty(),
        json!({
            "points_in_hypotheses": inside.len(),
            "failures": bad.len(),
            "max_variance_over_bound": worst,
            "first_failure": bad.first(),
            "points_outside_hypotheses": g.rows.len() - inside.len(),
            "outside_points_exceeding_formula": outside_exceed,
        }),
    )
}

pub fn check_oracle_variance_same(g: &OracleGrid, p: Perturb) -> CheckResult {
    variance_check("oracle_variance_same", g, true, p)
}

pub fn check_oracle_variance_diff(g: &OracleGrid, p: Perturb) -> CheckResult {
    variance_check("oracle_variance_diff", g, false, p)
}

/// m = 3 statistic against Σ_k Y_ik Y_jk written out term by term, on random graphs.
pub fn check_triangle_fast_path(graphs: usize, seed: u64, p: Perturb) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..graphs {
        let n = rng.random_range(3..=40);
        let dens: f64 = rng.random_range(0.05..0.95);
        let q: f64 = rng.random_range(0.01..0.99);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < dens {
                    edges.push((a, b));
                }
            }
        }
        let g = Graph::from_edges(n, &edges).expect("valid edges");
        let y = center_adjacency(&g, q);
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let fast = clique_stat(&y, i, j, 3, None).expect("valid anchors") * p.0;
        let mut naive = 0.0;
        for k in 0..n {
            if k != i && k != j {
                let a = if g.has_edge(i, k) { 1.0 - q } else { -q };
                let b = if g.has_edge(j, k) { 1.0 - q } else { -q };
                naive += a * b;
            }
        }
        worst = worst.max((fast - naive).abs());
    }
    result("triangle_fast_path", worst <= 1e-12, json!({"graphs": graphs, "max_abs_difference": worst}))
}

#[derive(Debug, Clone, Serialize)]
pub struct McMean {
    pub mean: f64,
    pub se: f64,
    pub target: f64,
    pub z_score: f64,
}

/// Empirical mean of S_12 (m = 3) under a conditioning, drawing only rows 0 and 1.
pub fn mc_mean(p: &SbmParams, cond: Conditioning, reps: usize, seed: u64, target: f64) -> McMean {
    let draws: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let s = crate::sweep::rep_seed(seed, r as usize);
            let z = sample_assignment(p.n, p.k, s, cond);
            let g = sample_graph_rows(p, &z, s, &[0, 1]);
            clique_stat(&center_adjacency(&g, p.q), 0, 1, 3, None).expect("n >= 3")
        })
        .collect();
    let (mean, sd) = mean_sd(&draws);
    let se = sd / (reps as f64).sqrt();
    McMean { mean, se, target, z_score: (mean - target) / se }
}

pub fn check_mean_mc(reps: usize, seed: u64, p: Perturb) -> CheckResult {
    let params = SbmParams::new(60, 8, 0.2, 0.3).expect("valid");
    let target = clique_mean(60, 8, 0.3, 3).expect("valid") * p.0;
    let same = mc_mean(&params, Conditioning::Same, reps, seed, target);
    let diff = mc_mean(&params, Conditioning::Diff, reps, seed ^ 0x5555, 0.0);
    let ok = same.z_score.abs() <= 4.0 && diff.z_score.abs() <= 4.0 && (target - 0.6525 * p.0).abs() < 1e-12;
    result("mean_mc", ok, json!({"reps": reps, "same": same, "diff": diff}))
}

pub fn check_single_edge(p: Perturb) -> CheckResult {
    let e = Template::new(2, &[(0, 1)]).expect("valid template");
    let r = single_template_check(&e, &LdContext::moments_only(2, 0.2, 0.3)).expect("connected");
    let ratio = r.ratio * p.0;
    let ok = (ratio - 0.3).abs() < 1e-12 && (r.bound - 0.375).abs() < 1e-12 && ratio <= r.bound;
    result("correlation_single_edge", ok, json!({"ratio": ratio, "bound": r.bound}))
}

/// 3 × 3 (q, λ) grid with q ≤ 1/2, q + 2λ ≤ 1, for each K.
pub fn correlation_grid(ks: &[usize]) -> Vec<LdContext> {
    let mut out = Vec::new();
    for &k in ks {
        for &q in &[0.05, 0.2, 0.5] {
            for &l in &[0.01, 0.1, 0.25] {
                out.push(LdContext::moments_only(k, q, l));
            }
        }
    }
    out
}

pub fn check_correlation_exhaustive(d: usize) -> CheckResult {
    let ctxs = correlation_grid(&[2, 5, 50]);
    match exhaustive_correlation(d, &ctxs) {
        Ok(s) => result(
            "correlation_exhaustive",
            s.all_hold(),
            json!({
                "D": d, "templates": s.templates, "pairs": s.pairs, "matchings": s.matchings,
                "checks": s.checks, "max_ratio_over_bound": s.max_ratio_over_bound,
                "violations": s.violation_count, "examples": s.violations,
            }),
        ),
        Err(e) => result("correlation_exhaustive", false, json!({"error": e.to_string()})),
    }
}

/// The low-degree point used by the Gram and correlation-bound checks.
pub fn ld_point() -> LdContext {
    LdContext::new(40, 10, 0.1, 1e-36, 2, 14.0).expect("valid context")
}

pub fn check_gram(ctx: &LdContext, p: Perturb) -> CheckResult {
    let signal = signal1_checks(ctx.n, ctx.k, ctx.q, ctx.lambda, ctx.d, ctx.c_s);
    let signal_ok = signal.iter().all(|c| c.holds);
    let ts = enumerate_templates(ctx.d).expect("D <= 4");
    match gram_report(&ts, ctx) {
        Ok(mut r) => {
            r.max_row_l1 *= p.0;
            if p.0 != 1.0 {
                // corrupted: pretend the diagonal drifted by the perturbation
                r.max_row_l1 = r.max_row_l1.max(p.0 - 1.0) * 1e3;
            }
            let pair_fail = r.pairs.iter().filter(|c| !c.holds).count();
            let ok = signal_ok && pair_fail == 0 && r.max_row_l1 <= r.row_l1_bound;
            let worst = r
                .pairs
                .iter()
                .map(|c| (c.gamma - if c.g1 == c.g2 { 1.0 } else { 0.0 }).abs() / c.bound)
                .fold(0.0, f64::max);
            result(
                "gram_near_identity",
                ok,
                json!({
                    "context": ctx, "signal1_holds": signal_ok, "templates": ts.len(),
                    "pair_failures": pair_fail, "max_deviation_over_bound": worst,
                    "max_row_l1": r.max_row_l1, "row_l1_bound": r.row_l1_bound,
                }),
            )
        }
        Err(e) => result("gram_near_identity", false, json!({"error": e.to_string()})),
    }
}

pub fn check_corr_bound(ctx: &LdContext, p: Perturb) -> CheckResult {
    match corr_bound(ctx) {
        Ok(r) => {
            let ln_value = r.ln_value + p.0.ln() * 1e5;
            let ok = ln_value <= r.ln_guarantee && r.terms.iter().all(|t| t.holds);
            result(
                "corr_bound",
                ok,
                json!({"value": r.value, "ln_value": ln_value, "guarantee": r.guarantee, "ln_guarantee": r.ln_guarantee, "per_template_bounds_hold": r.terms.iter().all(|t| t.holds)}),
            )
        }
        Err(e) => result("corr_bound", false, json!({"error": e.to_string()})),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalencePoint {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
}

/// Largest λ with 2 D^{16 c_s} λ ≤ (λ/K + q̄)^{1 − log_n K}, by bisection on ln λ.
fn lambda_edge(n: usize, k: usize, q: f64, d: usize, c_s: f64) -> f64 {
    let qb = q * (1.0 - q);
    let beta = (k as f64).ln() / (n as f64).ln();
    let f = |ll: f64| 2f64.ln() + 16.0 * c_s * (d as f64).ln() + ll - (1.0 - beta) * (ll.exp() / k as f64 + qb).ln();
    let (mut lo, mut hi) = (-700.0, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.exp()
}

/// Random points with log_n K ≥ 1/2 satisfying the low-degree hypothesis: n log-uniform
/// on [10, 10^12], K log-uniform on [√n, n], q log-uniform on [10^−8, 1/2], and λ a
/// log-uniform fraction in [10^−6, 1] of the largest admissible value.
pub fn equivalence_points(count: usize, seed: u64, d: usize, c_s: f64) -> Vec<EquivalencePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = 10f64.powf(rng.random_range(1.0..12.0)).round() as usize;
            let lo = (n as f64).sqrt().ceil().max(2.0);
            let k = (lo.ln() + rng.random::<f64>() * ((n as f64).ln() - lo.ln())).exp().round().clamp(lo, n as f64) as usize;
            let q = 10f64.powf(rng.random_range(-8.0..(0.5f64).log10()));
            let u = 10f64.powf(rng.random_range(-6.0..=0.0));
            let lambda = u * lambda_edge(n, k, q, d, c_s);
            EquivalencePoint { n, k, q, lambda }
        })
        .collect()
}

pub fn check_condition_equivalence_points(points: &[EquivalencePoint], d: usize, c_s: f64) -> CheckResult {
    let mut violations = 0;
    let mut vacuous = 0;
    let mut first = None;
    for p in points {
        match check_condition_equivalence(p.n, p.k, p.q, p.lambda, d, c_s) {
            Ok(r) => {
                if r.vacuous {
                    vacuous += 1;
                }
                if r.violations > 0 {
                    violations += r.violations;
                    first.get_or_insert(*p);
                }
            }
            Err(_) => {
                vacuous += 1;
            }
        }
    }
    result(
        "condition_equivalence",
        violations == 0 && vacuous == 0,
        json!({"points": points.len(), "D": d, "violations": violations, "points_failing_hypothesis": vacuous, "first_violation": first}),
    )
}

/// Default desk-scale suite. `corrupt` names a check whose formula gets perturbed.
pub fn run_suite(corrupt: Option<&str>) -> Result<VerifyReport, CliError> {
    if let Some(c) = corrupt {
        if !CHECK_NAMES.contains(&c) || c == "correlation_exhaustive" || c == "condition_equivalence" {
            return Err(CliError::Usage(format!("cannot corrupt `{c}`")));
        }
    }
    let p = |name: &str| if corrupt == Some(name) { Perturb::CORRUPTED } else { Perturb::NONE };
    let grid = oracle_grid();
    let ctx = ld_point();
    let checks = vec![
        check_constants(p("constants")),
        check_oracle_mean(&grid, p("oracle_mean")),
        check_oracle_variance_same(&grid, p("oracle_variance_same")),
        check_oracle_variance_diff(&grid, p("oracle_variance_diff")),
        check_triangle_fast_path(100, 11, p("triangle_fast_path")),
        check_mean_mc(20_000, 12, p("mean_mc")),
        check_single_edge(p("correlation_single_edge")),
        check_correlation_exhaustive(4),
        check_gram(&ctx, p("gram_near_identity")),
        check_corr_bound(&ctx, p("corr_bound")),
        check_condition_equivalence_points(&equivalence_points(100, 13, 4, 14.0), 4, 14.0),
    ];
    Ok(VerifyReport { passed: checks.iter().all(|c| c.passed), checks })
}

pub fn cmd_verify(o: &Opts) -> Result<(), CliError> {
    if let Some(dir) = &o.out {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!("output directory {} does not exist", dir.display())));
        }
    }
    let report = run_suite(o.corrupt.as_deref())?;
    let text = to_json(&report);
    match &o.out {
        Some(dir) => emit(Some(&dir.join("verify.json")), &text)?,
        None => emit(None, &text)?,
    }
    for c in &report.checks {
        eprintln!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Check(format!("failed checks: {}", failed.join(", "))))
    }
}
