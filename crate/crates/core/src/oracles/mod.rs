//! Closed-form moments of the clique statistic, variance bounds, regime
//! conditions and thresholds.

mod brute;

pub use brute::{brute_moments, BRUTE_BUDGET};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{factorial, falling, ln_falling};
use crate::sbm::derived_probs;

/// Slack allowed when a condition is checked in log space.
pub const LOG_TOL: f64 = 1e-9;

/// E_12[S_12] = (n−2)!/(n−m)! · (λ^{(m+1)/2}/K)^{m−2}.
pub fn clique_mean(n_eff: usize, k: usize, lambda: f64, m: usize) -> Result<f64> {
    if m < 3 || n_eff < m || k < 1 || lambda < 0.0 {
        return Err(Error::Param(format!(
            "clique_mean needs m >= 3, n_eff >= m, K >= 1, lambda >= 0 (got n_eff={n_eff}, K={k}, m={m}, lambda={lambda})"
        )));
    }
    let base = lambda.powf((m as f64 + 1.0) / 2.0) / k as f64;
    Ok(falling(n_eff as u64 - 2, m as u64 - 2) * base.powi(m as i32 - 2))
}

fn variance_hypotheses(k: usize, q: f64, lambda: f64, m: usize) -> Result<()> {
    let mut failed = Vec::new();
    if q > 0.5 {
        failed.push("q <= 1/2");
    }
    if q + 2.0 * lambda > 1.0 + 1e-12 {
        failed.push("q + 2 lambda <= 1");
    }
    if m < 3 || m > k {
        failed.push("3 <= m <= K");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Regime(format!("variance bound hypotheses fail: {}", failed.join(", "))))
    }
}

/// Upper bounds on var_12(S_12) and var_¬12(S_12); errors outside the hypotheses
/// q ≤ 1/2, q + 2λ ≤ 1, 3 ≤ m ≤ K.
pub fn clique_var_bounds(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize) -> Result<(f64, f64)> {
    variance_hypotheses(k, q, lambda, m)?;
    var_bounds_unchecked(n_eff, k, q, lambda, m)
}

/// The same two expressions without the hypothesis check.
pub fn var_bounds_unchecked(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize) -> Result<(f64, f64)> {
    let (qb, pb) = derived_probs(q, lambda)?;
    if m < 3 || n_eff < m {
        return Err(Error::Param(format!("need m >= 3 and n_eff >= m, got m={m}, n_eff={n_eff}")));
    }
    let (n, kf, mf) = (n_eff as f64, k as f64, m as f64);
    let e = m as i32 - 2;
    let a = falling(n_eff as u64 - 2, m as u64 - 2) * factorial(m as u64 - 2);
    let h = (mf + 1.0) / 2.0;
    let ratio = (qb / pb).powf(h);
    let inner = (mf - 2.0) / kf + ratio;
    let same1 = a * pb.powf((mf + 1.0) * (mf - 2.0) / 2.0) * inner.powi(e);
    let same2 = a * pb.powf((mf + 1.0) * (mf - 2.0)) / kf.powi(2 * e) * (n - mf + kf / pb.powf(h)).powi(e) * pb.sqrt();
    let diff = a * pb.powf((mf + 1.0) * (mf - 2.0) / 2.0) * (inner.powi(e) * ratio + (qb / pb).powf((mf - 1.0) * mf / 2.0));
    Ok((same1 + same2, diff))
}

/// Second evaluator of the variance bounds: every term assembled in log space with
/// the factors regrouped per power of p̄. Used to pin the direct evaluation.
pub fn var_bounds_logspace(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize) -> Result<(f64, f64)> {
    let (qb, pb) = derived_probs(q, lambda)?;
    if m < 3 || n_eff < m {
        return Err(Error::Param(format!("need m >= 3 and n_eff >= m, got m={m}, n_eff={n_eff}")));
    }
    let (n, kf, mf) = (n_eff as f64, k as f64, m as f64);
    let ln_a = ln_falling(n_eff as u64 - 2, m as u64 - 2) + ln_falling(m as u64 - 2, m as u64 - 2);
    let (lq, lp, lk) = (qb.ln(), pb.ln(), kf.ln());
    let h = (mf + 1.0) / 2.0;
    let e = mf - 2.0;
    // (m−2)/K·p̄^h + q̄^h, then raised to m−2: the p̄^{h(m−2)} prefactor absorbed
    let inner = ((mf - 2.0).ln() - lk + h * lp).exp() + (h * lq).exp();
    let ln_same1 = ln_a + e * inner.ln();
    // p̄^{2h}(n−m)/K² + p̄^h/K, raised to m−2, times p̄^{1/2}
    let inner2 = (2.0 * h * lp + (n - mf).ln() - 2.0 * lk).exp() + (h * lp - lk).exp();
    let ln_same2 = if n_eff == m {
        ln_a + e * (h * lp - lk) + 0.5 * lp
    } else {
        ln_a + e * inner2.ln() + 0.5 * lp
    };
    let ln_diff1 = ln_a + e * inner.ln() + h * (lq - lp);
    let ln_diff2 = ln_a + h * e * lp + (mf - 1.0) * mf / 2.0 * (lq - lp);
    Ok((ln_same1.exp() + ln_same2.exp(), ln_diff1.exp() + ln_diff2.exp()))
}

/// Left and right sides of the two slack conditions at ρ.
pub fn prop_conditions(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize, rho: f64) -> Result<(Check, Check)> {
    let (qb, _) = derived_probs(q, lambda)?;
    let (n, kf, mf) = (n_eff as f64, k as f64, m as f64);
    let h = (mf + 1.0) / 2.0;
    let c1 = Check::ge((n - 2.0) * lambda.powf(h) / kf, rho * (mf - 2.0).powi(2) * (1.0 + qb / lambda).powf(h));
    let c2 = Check::ge((n - 2.0) / (kf * kf) * (lambda * lambda / qb).powf(h), rho * (mf - 2.0));
    Ok((c1, c2))
}

/// The bracketed relative bounds var/E_12[S]² under the slack conditions at ρ.
pub fn prop_var_bounds(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize, rho: f64) -> Result<(f64, f64)> {
    if m < 3 || rho <= 0.0 || lambda <= 0.0 {
        return Err(Error::Param("need m >= 3, rho > 0, lambda > 0".into()));
    }
    let (c1, c2) = prop_conditions(n_eff, k, q, lambda, m, rho)?;
    match (c1.holds, c2.holds) {
        (true, true) => {}
        (false, true) => return Err(Error::Regime(format!("cond1 fails: {} < {}", c1.lhs, c1.rhs))),
        (true, false) => return Err(Error::Regime(format!("cond2 fails: {} < {}", c2.lhs, c2.rhs))),
        (false, false) => return Err(Error::Regime("cond1 and cond2 fail".into())),
    }
    Ok(prop_rel_unchecked(q, lambda, m, rho))
}

fn prop_rel_unchecked(q: f64, lambda: f64, m: usize, rho: f64) -> (f64, f64) {
    let qb = q * (1.0 - q);
    let mf = m as f64;
    let e = m as i32 - 2;
    let x = 1.0 + qb / lambda;
    let lead = (2.0 / rho).powi(e);
    let same = lead + ((mf - 2.0) * x.powf(mf + 1.0) + 1.0 / rho).powi(e) * x.sqrt() * lambda.sqrt();
    let diff = lead + (1.0 / rho).powi(e);
    (same, diff)
}

/// The ρ at which the slack conditions on a block of N nodes coincide with the
/// median-of-means conditions on n nodes: 2·32^{1/(m−2)}.
pub fn mom_rho(m: usize) -> f64 {
    2.0 * 32f64.powf(1.0 / (m as f64 - 2.0))
}

pub fn kappa_m(m: usize) -> f64 {
    let mf = m as f64;
    2f64.powi(-11) * (2f64.powf(mf + 2.0) * (mf - 2.0)).powf(-(2.0 * mf - 4.0))
}

/// κ_m through exponent bookkeeping: 2^{−11 − (m+2)(2m−4)} · (m−2)^{−(2m−4)}.
pub fn kappa_m_alt(m: usize) -> f64 {
    let mf = m as f64;
    let two_exp = -11.0 - (mf + 2.0) * (2.0 * mf - 4.0);
    (two_exp * std::f64::consts::LN_2 - (2.0 * mf - 4.0) * (mf - 2.0).ln()).exp()
}

pub fn w_m(m: usize) -> f64 {
    let mf = m as f64;
    2.0 * (96.0 * (mf - 2.0).powi(2) * 32f64.powf(1.0 / (mf - 2.0))).powf(2.0 / (mf + 1.0))
}

/// w_m with the powers of two collected: 2 · 3^{2/(m+1)} · 2^{(10 + 10/(m−2))/(m+1)} · (m−2)^{4/(m+1)}.
pub fn w_m_alt(m: usize) -> f64 {
    let mf = m as f64;
    let ln = std::f64::consts::LN_2
        + 2.0 / (mf + 1.0) * 3f64.ln()
        + (10.0 + 10.0 / (mf - 2.0)) / (mf + 1.0) * std::f64::consts::LN_2
        + 4.0 / (mf + 1.0) * (mf - 2.0).ln();
    ln.exp()
}

/// lhs, rhs and whether the named inequality holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    pub fn ge(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs >= rhs }
    }

    pub fn le(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs <= rhs }
    }

    pub fn lt(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs, holds: lhs < rhs }
    }
}

/// An inequality `lhs <= rhs` evaluated on natural logs of both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogCheck {
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

impl LogCheck {
    pub fn le(ln_lhs: f64, ln_rhs: f64) -> Self {
        Self { ln_lhs, ln_rhs, holds: ln_lhs <= ln_rhs + LOG_TOL * ln_rhs.abs().max(1.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n_eff: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
    pub m: usize,
    pub mean_same: f64,
    pub mean_diff: f64,
    pub var_bound_same: f64,
    pub var_bound_diff: f64,
}

pub fn moment_report(n_eff: usize, k: usize, q: f64, lambda: f64, m: usize) -> Result<MomentReport> {
    let (var_bound_same, var_bound_diff) = clique_var_bounds(n_eff, k, q, lambda, m)?;
    Ok(MomentReport {
        n_eff,
        k,
        q,
        lambda,
        m,
        mean_same: clique_mean(n_eff, k, lambda, m)?,
        mean_diff: 0.0,
        var_bound_same,
        var_bound_diff,
    })
}

/// ln of min(√n/K·(λ/√q̄)^r, λ^{r/2}/√(K/n)).
fn ln_signal_min(n: f64, k: f64, qb: f64, lambda: f64, r: f64) -> f64 {
    let ll = lambda.ln();
    let a = 0.5 * n.ln() - k.ln() + r * (ll - 0.5 * qb.ln());
    let b = 0.5 * r * ll - 0.5 * (k.ln() - n.ln());
    a.min(b)
}

/// Per-r form of the low-degree signal condition: D^{8 c_s r}·min(...) ≤ 1.
pub fn signal1_checks(n: usize, k: usize, q: f64, lambda: f64, d: usize, c_s: f64) -> Vec<LogCheck> {
    let qb = q * (1.0 - q);
    (1..=d)
        .map(|r| {
            let rf = r as f64;
            let lhs = 8.0 * c_s * rf * (d as f64).ln() + ln_signal_min(n as f64, k as f64, qb, lambda, rf);
            LogCheck::le(lhs, 0.0)
        })
        .collect()
}

fn log_n(n: usize, x: f64) -> f64 {
    x.ln() / (n as f64).ln()
}

/// 2 D^{16 c_s} λ ≤ (λ/K + q̄)^{1 − log_n K}, in logs.
pub fn condition_signal2(n: usize, k: usize, q: f64, lambda: f64, d: usize, c_s: f64) -> LogCheck {
    let qb = q * (1.0 - q);
    let beta = log_n(n, k as f64);
    let lhs = 2f64.ln() + 16.0 * c_s * (d as f64).ln() + lambda.ln();
    let rhs = (1.0 - beta) * (lambda / k as f64 + qb).ln();
    LogCheck::le(lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub vacuous: bool,
    pub log_n_k: f64,
    pub hypothesis: LogCheck,
    /// r = 1..D: ln of min(...) against ln D^{−8 c_s r}.
    pub per_r: Vec<LogCheck>,
    pub violations: usize,
}

/// Under 2D^{16c_s}λ ≤ (λ/K + q̄)^{1−log_n K} and log_n K ≥ 1/2, every r-term of the
/// signal condition must hold; any failure is counted as a violation.
pub fn check_condition_equivalence(n: usize, k: usize, q: f64, lambda: f64, d: usize, c_s: f64) -> Result<EquivalenceReport> {
    derived_probs(q, lambda)?;
    let hypothesis = condition_signal2(n, k, q, lambda, d, c_s);
    let log_n_k = log_n(n, k as f64);
    let vacuous = !(hypothesis.holds && log_n_k >= 0.5);
    let per_r = signal1_checks(n, k, q, lambda, d, c_s);
    let violations = if vacuous { 0 } else { per_r.iter().filter(|c| !c.holds).count() };
    Ok(EquivalenceReport { vacuous, log_n_k, hypothesis, per_r, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
    pub m: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub c_s: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub params: RegimeParams,
    pub q_bar: f64,
    pub p_bar: f64,
    pub log_n_k: f64,
    /// Default block count ⌈24 ln n⌉ and the resulting minimum block size N − 2.
    pub default_l: usize,
    pub block_size: usize,
    #[serde(rename = "cond1:MoM")]
    pub cond1_mom: Check,
    #[serde(rename = "cond2:MoM")]
    pub cond2_mom: Check,
    #[serde(rename = "lambda")]
    pub lambda_cap: Check,
    #[serde(rename = "cond1")]
    pub cond1: Check,
    #[serde(rename = "cond2")]
    pub cond2: Check,
    #[serde(rename = "kappa")]
    pub kappa_m: f64,
    pub w_m: f64,
    #[serde(rename = "clique:final")]
    pub clique_final: Check,
    #[serde(rename = "KS")]
    pub ks: Check,
    pub ks_holds: bool,
    #[serde(rename = "inform")]
    pub inform: Check,
    #[serde(rename = "new")]
    pub chin_threshold_value: f64,
    #[serde(rename = "condition-signal2:cor")]
    pub condition_signal2: LogCheck,
    #[serde(rename = "signal1")]
    pub signal1_per_r: Vec<LogCheck>,
    pub signal1_holds: bool,
    pub feasible: bool,
    pub notes: Vec<String>,
}

pub fn default_blocks(n: usize) -> usize {
    ((24.0 * (n as f64).ln()).ceil() as usize).max(1)
}

/// Evaluates every threshold and condition at one parameter point. Never fails:
/// infeasible points are flagged in `feasible` and `notes`.
pub fn regime_report(n: usize, k: usize, q: f64, lambda: f64, m: usize, d: usize, c_s: f64, rho: f64) -> RegimeReport {
    let mut notes = Vec::new();
    if derived_probs(q, lambda).is_err() {
        notes.push("q, lambda outside 0 < q < 1, 0 <= lambda <= 1 - q".into());
    }
    if q > 0.5 || q + 2.0 * lambda > 1.0 + 1e-12 {
        notes.push("q <= 1/2 and q + 2 lambda <= 1 not both satisfied".into());
    }
    if m < 3 || m > k {
        notes.push("m outside 3..=K".into());
    }
    if k < 2 || k > n {
        notes.push("K outside 2..=n".into());
    }
    let default_l = default_blocks(n);
    let block_size = (n.saturating_sub(2)) / default_l;
    if block_size < m.saturating_sub(2) || block_size == 0 {
        notes.push(format!("default L = {default_l} leaves blocks of {block_size} nodes"));
    }
    let qb = q * (1.0 - q);
    let pb = qb + lambda * (1.0 - 2.0 * q);
    let (nf, kf, mf) = (n as f64, k as f64, m as f64);
    let ln_n = nf.ln();
    let h = (mf + 1.0) / 2.0;
    let x = 1.0 + qb / lambda;
    let c_mom = 48.0 * 32f64.powf(1.0 / (mf - 2.0));
    let cond1_mom = Check::ge((nf - 2.0) * lambda.powf(h) / (kf * ln_n), c_mom * (mf - 2.0).powi(2) * x.powf(h));
    let cond2_mom = Check::ge((nf - 2.0) / (kf * kf * ln_n) * (lambda * lambda / qb).powf(h), c_mom * (mf - 2.0));
    let lambda_cap = Check::le(
        lambda,
        32f64.powi(-2) * x.powf(-2.0 * (mf + 1.0) * (mf - 2.0) - 1.0) * (2.0 * mf - 4.0).powf(-(2.0 * mf - 4.0)),
    );
    let (cond1, cond2) = prop_conditions(n, k, q, lambda, m, rho).unwrap_or((
        Check { lhs: f64::NAN, rhs: f64::NAN, holds: false },
        Check { lhs: f64::NAN, rhs: f64::NAN, holds: false },
    ));
    let beta = log_n(n, kf);
    let chin = (lambda / kf + qb).powf(1.0 - beta);
    let w = w_m(m);
    let clique_final = Check::ge(lambda, w * ln_n.powf(2.0 / (mf + 1.0)) * chin);
    let ks = Check::lt(nf * lambda * lambda / (lambda + kf * q), kf);
    let inform = Check::ge(nf * lambda * lambda / (lambda + kf * q), kf.ln());
    let signal1_per_r = signal1_checks(n, k, q, lambda, d, c_s);
    let signal1_holds = signal1_per_r.iter().all(|c| c.holds);
    RegimeReport {
        params: RegimeParams { n, k, q, lambda, m, d, c_s, rho },
        q_bar: qb,
        p_bar: pb,
        log_n_k: beta,
        default_l,
        block_size,
        cond1_mom,
        cond2_mom,
        lambda_cap,
        cond1,
        cond2,
        kappa_m: kappa_m(m),
        w_m: w,
        clique_final,
        ks,
        ks_holds: ks.holds,
        inform,
        chin_threshold_value: chin,
        condition_signal2: condition_signal2(n, k, q, lambda, d, c_s),
        signal1_per_r,
        signal1_holds,
        feasible: notes.is_empty(),
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_examples() {
        assert!((clique_mean(60, 8, 0.3, 3).unwrap() - 0.6525).abs() < 1e-12);
        assert!((clique_mean(10, 2, 1.0, 4).unwrap() - 14.0).abs() < 1e-12);
        assert!((clique_mean(4, 2, 1.0, 3).unwrap() - 1.0).abs() < 1e-12);
        assert!(clique_mean(4, 2, 1.0, 2).is_err());
        assert!(clique_mean(3, 2, 1.0, 4).is_err());
    }

    #[test]
    fn var_bounds_pinned_value() {
        let (s, d) = clique_var_bounds(60, 8, 0.2, 0.3, 3).unwrap();
        let (s2, d2) = var_bounds_logspace(60, 8, 0.2, 0.3, 3).unwrap();
        assert!((s - s2).abs() <= 1e-12 * s.abs());
        assert!((d - d2).abs() <= 1e-12 * d.abs());
        assert!((s - 3.2141033086045325).abs() < 1e-12, "{s}");
        assert!((d - 1.2131432525951557).abs() < 1e-12, "{d}");
    }

    #[test]
    fn var_bounds_two_paths_agree_on_grid() {
        for &n in &[5usize, 8, 40, 300] {
            for &k in &[4usize, 6, 30] {
                for &(q, l) in &[(0.1, 0.2), (0.3, 0.05), (0.5, 0.25), (0.01, 0.4)] {
                    for m in 3..=4 {
                        if n < m {
                            continue;
                        }
                        let (a, b) = clique_var_bounds(n, k, q, l, m).unwrap();
                        let (c, d) = var_bounds_logspace(n, k, q, l, m).unwrap();
                        assert!((a - c).abs() <= 1e-12 * a.abs().max(1e-300), "{n} {k} {q} {l} {m}");
                        assert!((b - d).abs() <= 1e-12 * b.abs().max(1e-300));
                    }
                }
            }
        }
    }

    #[test]
    fn var_bounds_hypotheses() {
        assert!(matches!(clique_var_bounds(8, 2, 0.2, 0.3, 3), Err(Error::Regime(_))));
        assert!(matches!(clique_var_bounds(8, 4, 0.6, 0.1, 3), Err(Error::Regime(_))));
        assert!(matches!(clique_var_bounds(8, 4, 0.2, 0.45, 3), Err(Error::Regime(_))));
        let (s, d) = clique_var_bounds(50, 5, 0.3, 1e-9, 3).unwrap();
        assert!(s >= 0.0 && d >= 0.0);
    }

    #[test]
    fn prop_bounds_cases() {
        // very large rho is only admissible when the conditions are loose; use a large graph
        let (s, d) = prop_var_bounds(1_000_000_000, 3, 0.01, 0.4, 3, 1e6).unwrap();
        assert!((d - 3e-6).abs() < 1e-18 && s > d);
        let e = prop_var_bounds(20, 10, 0.2, 0.3, 3, 2.0).unwrap_err();
        assert!(matches!(e, Error::Regime(ref s) if s.contains("cond")));
    }

    #[test]
    fn mom_rho_links_block_and_global_conditions() {
        // cond*(N, rho = 2·32^{1/(m−2)}) with N − 2 = (n − 2)/(24 ln n) against the MoM forms
        for &(n, k, q, l, m) in &[(5000usize, 2usize, 0.05, 0.45, 3usize), (1e5 as usize, 3, 0.01, 0.3, 4)] {
            let r = regime_report(n, k, q, l, m, 2, 14.0, 1.0);
            let n_block = (n as f64 - 2.0) / (24.0 * (n as f64).ln());
            let qb = q * (1.0 - q);
            let mf = m as f64;
            let h = (mf + 1.0) / 2.0;
            let lhs1 = n_block * l.powf(h) / k as f64;
            let rhs1 = mom_rho(m) * (mf - 2.0).powi(2) * (1.0 + qb / l).powf(h);
            assert!(((lhs1 / rhs1) / (r.cond1_mom.lhs / r.cond1_mom.rhs) - 1.0).abs() < 1e-12);
            let lhs2 = n_block / (k * k) as f64 * (l * l / qb).powf(h);
            let rhs2 = mom_rho(m) * (mf - 2.0);
            assert!(((lhs2 / rhs2) / (r.cond2_mom.lhs / r.cond2_mom.rhs) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mom_regime_rel_bounds_below_sixteenth() {
        // lambda small enough for the cap; n huge so the block conditions hold
        let (q, l, m, k) = (1e-6, 1e-4, 3usize, 3usize);
        let r = regime_report(10, k, q, l, m, 2, 14.0, 1.0);
        assert!(r.lambda_cap.holds);
        let (s, d) = prop_var_bounds(1usize << 60, k, q, l, m, mom_rho(m)).unwrap();
        assert!(s <= 1.0 / 16.0 && d <= 1.0 / 16.0, "{s} {d}");
    }

    #[test]
    fn clique_bounds_within_relative_bounds() {
        // where the slack conditions hold at rho, the direct bounds sit below E_12[S]^2 times
        // the relative brackets
        let mut checked = 0;
        for &n in &[100usize, 10_000, 1_000_000, 100_000_000] {
            for &k in &[4usize, 5, 8, 20] {
                for m in 3..=4 {
                    for &q in &[0.5, 0.2, 0.05, 0.01, 0.001] {
                        for &l in &[0.5, 0.3, 0.1, 0.03, 0.01] {
                            if q + 2.0 * l > 1.0 || m > k {
                                continue;
                            }
                            for &rho in &[1.0, 2.0, 10.0, 100.0] {
                                if let Ok((rs, rd)) = prop_var_bounds(n, k, q, l, m, rho) {
                                    let (vs, vd) = clique_var_bounds(n, k, q, l, m).unwrap();
                                    let e2 = clique_mean(n, k, l, m).unwrap().powi(2);
                                    assert!(vs <= e2 * rs && vd <= e2 * rd, "{n} {k} {m} {q} {l} {rho}");
                                    checked += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn constants() {
        assert!((kappa_m(3) - 2f64.powi(-21)).abs() < 1e-12 * 2f64.powi(-21));
        assert!((w_m(3) - 2.0 * 3072f64.sqrt()).abs() < 1e-12);
        assert!((w_m(3) - 110.85125168440814).abs() < 1e-9);
        for m in 3..=8 {
            assert!((kappa_m(m) / kappa_m_alt(m) - 1.0).abs() < 1e-12);
            assert!((w_m(m) / w_m_alt(m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_spot_value() {
        let r = regime_report(10_000, 50, 5e-4, 1e-2, 3, 2, 14.0, 1.0);
        assert!((r.ks.lhs - 1.0 / 0.035).abs() < 1e-9);
        assert!(r.ks_holds && r.ks.rhs == 50.0);
    }

    #[test]
    fn mom_margins_increase_in_lambda() {
        let (n, k, q, m) = (5000usize, 4usize, 0.05, 3usize);
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for i in 1..40 {
            let l = i as f64 * 0.01;
            let r = regime_report(n, k, q, l, m, 2, 14.0, 1.0);
            let cur = (r.cond1_mom.lhs - r.cond1_mom.rhs, r.cond2_mom.lhs - r.cond2_mom.rhs);
            assert!(cur.0 > prev.0 && cur.1 > prev.1);
            prev = cur;
        }
    }

    #[test]
    fn equivalence_contract() {
        let rep = check_condition_equivalence(10_000, 200, 0.01, 1e-200, 4, 14.0).unwrap();
        assert!(!rep.vacuous && rep.violations == 0);
        let rep = check_condition_equivalence(10_000, 200, 0.01, 0.3, 4, 14.0).unwrap();
        assert!(rep.vacuous && rep.violations == 0);
        let rep = check_condition_equivalence(10_000, 20, 0.01, 1e-200, 4, 14.0).unwrap();
        assert!(rep.vacuous);
    }

    #[test]
    fn regime_report_serializes_with_tags() {
        let r = regime_report(1000, 10, 0.05, 0.1, 3, 2, 14.0, 1.0);
        let v = serde_json::to_value(&r).unwrap();
        for key in ["cond1:MoM", "cond2:MoM", "lambda", "kappa", "clique:final", "KS", "new", "signal1", "condition-signal2:cor"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["lambda"]["holds"], serde_json::Value::Bool(r.lambda_cap.holds));
    }
}
