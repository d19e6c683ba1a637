//! Exact moments of template polynomials under the SBM.

use serde::{Deserialize, Serialize};

use super::matching::{forest_rank, Matching, Overlay};
use super::template::Template;
use crate::error::{Error, Result};
use crate::num::falling;

/// Model and degree parameters for the low-degree computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdContext {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
    #[serde(rename = "D")]
    pub d: usize,
    pub c_s: f64,
}

pub const DEFAULT_CS: f64 = 14.0;

impl LdContext {
    pub fn new(n: usize, k: usize, q: f64, lambda: f64, d: usize, c_s: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Param(format!("D must be at least 2, got {d}")));
        }
        if k < 2 || k > n {
            return Err(Error::Param(format!("need 2 <= K <= n, got K={k}, n={n}")));
        }
        if !(q > 0.0 && q < 1.0) || !(lambda >= 0.0) || q + lambda > 1.0 {
            return Err(Error::Param(format!("need 0 < q < 1, lambda >= 0, q + lambda <= 1; got q={q}, lambda={lambda}")));
        }
        Ok(LdContext { n, k, q, lambda, d, c_s })
    }

    /// Parameters for moment formulas only (n, D and c_s unused).
    pub fn moments_only(k: usize, q: f64, lambda: f64) -> Self {
        LdContext { n: k.max(2), k, q, lambda, d: 2, c_s: DEFAULT_CS }
    }

    pub fn q_bar(&self) -> f64 {
        self.q * (1.0 - self.q)
    }

    /// E[Y²] given co-membership.
    pub fn p_bar(&self) -> f64 {
        self.q_bar() + self.lambda * (1.0 - 2.0 * self.q)
    }

    /// Hypotheses under which the correlation bounds are stated.
    pub fn in_bound_regime(&self) -> bool {
        self.q <= 0.5 && self.q + 2.0 * self.lambda <= 1.0
    }
}

/// E[Π_{e∈e1} Y_e · Π_{e∈e2} Y_e] for two edge sets on a common node set.
/// Expands each doubled edge as q̄ + λ(1−2q)X_e and uses E[Π_F X] = K^{−rank(F)}.
pub fn edge_moment(e1: &[(u8, u8)], e2: &[(u8, u8)], ctx: &LdContext) -> f64 {
    let cap: Vec<(u8, u8)> = e1.iter().filter(|e| e2.contains(e)).copied().collect();
    let delta: Vec<(u8, u8)> = e1
        .iter()
        .filter(|e| !e2.contains(e))
        .chain(e2.iter().filter(|e| !e1.contains(e)))
        .copied()
        .collect();
    let table = RankTable::new(&delta, &cap);
    table.eval(ctx)
}

/// Spanning-forest ranks of E_Δ ∪ A over the subsets A ⊆ E_∩, grouped by |A|.
/// This is all the cross moment depends on.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankTable {
    pub e_delta: usize,
    pub e_cap: usize,
    /// (|A|, rank, count), sorted
    pub terms: Vec<(u8, u8, u32)>,
}

const MAX_CAP: usize = 20;

impl RankTable {
    pub fn new(delta: &[(u8, u8)], cap: &[(u8, u8)]) -> Self {
        assert!(cap.len() <= MAX_CAP, "too many shared edges for subset expansion");
        let mut counts = std::collections::BTreeMap::new();
        for mask in 0u32..1 << cap.len() {
            let chosen = cap.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e);
            let r = forest_rank(delta.iter().copied().chain(chosen)) as u8;
            *counts.entry((mask.count_ones() as u8, r)).or_insert(0u32) += 1;
        }
        RankTable { e_delta: delta.len(), e_cap: cap.len(), terms: counts.into_iter().map(|((a, r), c)| (a, r, c)).collect() }
    }

    pub fn eval(&self, ctx: &LdContext) -> f64 {
        let qb = ctx.q_bar();
        let dl = ctx.lambda * (1.0 - 2.0 * ctx.q);
        let k = ctx.k as f64;
        let s: f64 = self
            .terms
            .iter()
            .map(|&(a, r, c)| c as f64 * dl.powi(a as i32) * qb.powi(self.e_cap as i32 - a as i32) * k.powi(-(r as i32)))
            .sum();
        ctx.lambda.powi(self.e_delta as i32) * s
    }
}

/// λ^{|E|} K^{−(|V*| − #CC)} over the pruned template.
pub fn expected_p(g: &Template, ctx: &LdContext) -> f64 {
    let rank = forest_rank(g.edges().map(|(a, b)| (a as u8, b as u8)));
    ctx.lambda.powi(g.ne() as i32) * (ctx.k as f64).powi(-(rank as i32))
}

pub fn cross_moment(g1: &Template, g2: &Template, m: &Matching, ctx: &LdContext) -> f64 {
    let ov = Overlay::new(g1, g2, m);
    RankTable::new(&ov.e_delta, &ov.e_cap).eval(ctx)
}

/// E[P_{G,π}²].
pub fn second_moment(g: &Template, ctx: &LdContext) -> f64 {
    let e: Vec<(u8, u8)> = g.edges().map(|(a, b)| (a as u8, b as u8)).collect();
    if e.len() <= MAX_CAP {
        RankTable::new(&[], &e).eval(ctx)
    } else {
        partition_moment(&e, &e, ctx)
    }
}

/// Same quantity as [`edge_moment`], by enumerating set partitions of the touched
/// nodes of each connected piece with weights K(K−1)…(K−b+1)/K^{|V|}.
pub fn partition_moment(e1: &[(u8, u8)], e2: &[(u8, u8)], ctx: &LdContext) -> f64 {
    let mut all: Vec<((u8, u8), bool)> = Vec::new();
    for &e in e1.iter().chain(e2) {
        let shared = e1.contains(&e) && e2.contains(&e);
        if !all.iter().any(|(f, _)| *f == e) {
            all.push((e, shared));
        }
    }
    let (qb, pb) = (ctx.q_bar(), ctx.p_bar());
    let mut total = 1.0;
    for comp in pieces(&all) {
        let mut nodes: Vec<u8> = comp.iter().flat_map(|((a, b), _)| [*a, *b]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        let idx = |v: u8| nodes.binary_search(&v).unwrap();
        let local: Vec<(usize, usize, bool)> = comp.iter().map(|&((a, b), s)| (idx(a), idx(b), s)).collect();
        let nv = nodes.len();
        let mut block = vec![0usize; nv];
        let mut acc = 0.0;
        set_partitions(&mut block, 1, 1, &mut |blk, nb| {
            let mut v = falling(ctx.k as u64, nb as u64) / (ctx.k as f64).powi(nv as i32);
            for &(a, b, s) in &local {
                let same = blk[a] == blk[b];
                v *= match (s, same) {
                    (true, true) => pb,
                    (true, false) => qb,
                    (false, true) => ctx.lambda,
                    (false, false) => 0.0,
                };
            }
            acc += v;
        });
        total *= acc;
    }
    total
}

fn pieces(edges: &[((u8, u8), bool)]) -> Vec<Vec<((u8, u8), bool)>> {
    let mut out: Vec<Vec<((u8, u8), bool)>> = Vec::new();
    for &e in edges {
        let hits: Vec<usize> = (0..out.len())
            .filter(|&i| out[i].iter().any(|((a, b), _)| [*a, *b].contains(&e.0 .0) || [*a, *b].contains(&e.0 .1)))
            .collect();
        let mut merged = vec![e];
        for &i in hits.iter().rev() {
            merged.extend(out.swap_remove(i));
        }
        out.push(merged);
    }
    out
}

/// Restricted growth strings: block[0] = 0, block[i] ≤ max(block[..i]) + 1.
fn set_partitions<F: FnMut(&[usize], usize)>(block: &mut [usize], i: usize, used: usize, f: &mut F) {
    if i >= block.len() {
        f(block, used.min(block.len()));
        return;
    }
    for b in 0..=used {
        block[i] = b;
        set_partitions(block, i + 1, used.max(b + 1), f);
    }
}

/// Outcome of one correlation inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCheck {
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

pub const CORR_SLACK: f64 = 1e-9;

fn corr_bound_value(e_delta: usize, u: usize, ctx: &LdContext) -> f64 {
    let k = ctx.k as f64;
    let a = (ctx.lambda / ctx.q_bar().sqrt()).powi(e_delta as i32) / k.powi(u as i32);
    let b = ctx.lambda.powf(e_delta as f64 / 2.0) / k.powf(u as f64 / 2.0);
    a.min(b)
}

fn check(ratio: f64, bound: f64) -> CorrelationCheck {
    CorrelationCheck { ratio, bound, holds: ratio <= bound * (1.0 + CORR_SLACK) }
}

/// |E[P1 P2]| / √(E[P1²] E[P2²]) against min((λ/√q̄)^{|E_Δ|}/K^{|U|}, λ^{|E_Δ|/2}/K^{|U|/2}).
pub fn correlation_check(g1: &Template, g2: &Template, m: &Matching, ctx: &LdContext) -> Result<CorrelationCheck> {
    if !m.in_mstar(g1, g2) {
        return Err(Error::Precondition("matching has a component that misses the pruned matching".into()));
    }
    if !ctx.in_bound_regime() {
        return Err(Error::Regime(format!("need q <= 1/2 and q + 2 lambda <= 1, got q={}, lambda={}", ctx.q, ctx.lambda)));
    }
    let ov = Overlay::new(g1, g2, m);
    let cross = RankTable::new(&ov.e_delta, &ov.e_cap).eval(ctx);
    let ratio = cross.abs() / (second_moment(g1, ctx) * second_moment(g2, ctx)).sqrt();
    Ok(check(ratio, corr_bound_value(ov.stats.e_delta, ov.stats.u1 + ov.stats.u2, ctx)))
}

/// Single connected template: E[P] / √E[P²] against the bound with |V| − 1 and |E|.
pub fn single_template_check(g: &Template, ctx: &LdContext) -> Result<CorrelationCheck> {
    if !g.is_connected() {
        return Err(Error::Precondition(format!("template {} is not connected", g.encoding())));
    }
    let ratio = expected_p(g, ctx).abs() / second_moment(g, ctx).sqrt();
    Ok(check(ratio, corr_bound_value(g.ne(), g.nv() - 1, ctx)))
}

/// Precomputed, parameter-free part of a correlation check; equal keys give equal checks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CheckKey {
    pub table: RankTable,
    pub u: usize,
}

impl CheckKey {
    pub fn new(g1: &Template, g2: &Template, m: &Matching) -> Self {
        let ov = Overlay::new(g1, g2, m);
        CheckKey { table: RankTable::new(&ov.e_delta, &ov.e_cap), u: ov.stats.u1 + ov.stats.u2 }
    }

    pub fn evaluate(&self, s1: f64, s2: f64, ctx: &LdContext) -> CorrelationCheck {
        let ratio = self.table.eval(ctx).abs() / (s1 * s2).sqrt();
        check(ratio, corr_bound_value(self.table.e_delta, self.u, ctx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ld::enumerate_templates;
    use crate::ld::matching::for_each_matching;

    fn t(nv: usize, e: &[(usize, usize)]) -> Template {
        Template::new(nv, e).unwrap()
    }

    fn ctx(k: usize, q: f64, l: f64) -> LdContext {
        LdContext::moments_only(k, q, l)
    }

    /// Direct average over all z in [K]^{nodes}, with E[Y|z] and E[Y²|z] per edge.
    fn z_moment(e1: &[(u8, u8)], e2: &[(u8, u8)], c: &LdContext) -> f64 {
        let nodes = e1.iter().chain(e2).flat_map(|&(a, b)| [a, b]).max().unwrap() as usize + 1;
        let total = c.k.pow(nodes as u32);
        let mut acc = 0.0;
        for code in 0..total {
            let z: Vec<usize> = (0..nodes).map(|i| code / c.k.pow(i as u32) % c.k).collect();
            let mut v = 1.0;
            let mut seen = Vec::new();
            for &e in e1.iter().chain(e2) {
                if seen.contains(&e) {
                    continue;
                }
                seen.push(e);
                let same = z[e.0 as usize] == z[e.1 as usize];
                let twice = e1.contains(&e) && e2.contains(&e);
                v *= match (twice, same) {
                    (true, true) => c.p_bar(),
                    (true, false) => c.q_bar(),
                    (false, true) => c.lambda,
                    (false, false) => 0.0,
                };
            }
            acc += v;
        }
        acc / total as f64
    }

    #[test]
    fn expected_p_examples() {
        let c = ctx(5, 0.2, 0.3);
        assert!((expected_p(&t(2, &[(0, 1)]), &c) - 0.3 / 5.0).abs() < 1e-15);
        assert!((expected_p(&t(3, &[(0, 1), (0, 2), (1, 2)]), &c) - 0.027 / 25.0).abs() < 1e-15);
        assert!((expected_p(&t(4, &[(0, 2), (1, 3)]), &c) - 0.09 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn single_edge_second_moment_and_check() {
        let c = ctx(2, 0.2, 0.3);
        let e = t(2, &[(0, 1)]);
        assert!((second_moment(&e, &c) - 0.25).abs() < 1e-15);
        let m = Matching::new(&e, &e, &[]).unwrap();
        assert!((cross_moment(&e, &e, &m, &c) - 0.25).abs() < 1e-15);
        let r = single_template_check(&e, &c).unwrap();
        assert!((r.ratio - 0.3).abs() < 1e-12);
        assert!((r.bound - 0.375).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn null_model_moments() {
        let c = ctx(3, 0.2, 0.0);
        for g in enumerate_templates(3).unwrap() {
            assert!((second_moment(&g, &c) - c.q_bar().powi(g.ne() as i32)).abs() < 1e-15);
            for_each_matching(&g, &g, |m| {
                let ov = Overlay::new(&g, &g, m);
                if ov.stats.e_delta > 0 {
                    assert_eq!(cross_moment(&g, &g, m, &c), 0.0);
                }
            });
        }
    }

    #[test]
    fn three_evaluators_agree() {
        let ts = enumerate_templates(3).unwrap();
        for &(k, q, l) in &[(2, 0.2, 0.3), (3, 0.1, 0.45), (2, 0.5, 0.25)] {
            let c = ctx(k, q, l);
            for g1 in ts.iter().step_by(4) {
                for g2 in ts.iter().step_by(5) {
                    for_each_matching(g1, g2, |m| {
                        let ov = Overlay::new(g1, g2, m);
                        if ov.nu > 6 {
                            return;
                        }
                        let a = cross_moment(g1, g2, m, &c);
                        let b = partition_moment(&ov.e1, &ov.e2, &c);
                        let z = z_moment(&ov.e1, &ov.e2, &c);
                        assert!((a - z).abs() < 1e-12 && (b - z).abs() < 1e-12, "{a} {b} {z}");
                    });
                }
            }
        }
    }

    #[test]
    fn triangle_second_moment_by_enumeration() {
        let c = ctx(2, 0.2, 0.3);
        let tri = t(3, &[(0, 1), (0, 2), (1, 2)]);
        let e: Vec<(u8, u8)> = tri.edges().map(|(a, b)| (a as u8, b as u8)).collect();
        assert!((second_moment(&tri, &c) - z_moment(&e, &e, &c)).abs() < 1e-12);
    }

    #[test]
    fn partition_oracle_large_k() {
        // falling-factorial weights vanish once blocks outnumber K
        let c = ctx(2, 0.2, 0.3);
        let e = [(0u8, 1u8), (1, 2), (0, 2)];
        assert!((partition_moment(&e, &e, &c) - edge_moment(&e, &e, &c)).abs() < 1e-14);
        let c = ctx(50, 0.1, 0.2);
        let e2 = [(0u8, 2u8), (2, 3)];
        assert!((partition_moment(&e, &e2, &c) - edge_moment(&e, &e2, &c)).abs() < 1e-14);
    }

    #[test]
    fn identical_perfect_matching_ratio_at_most_one() {
        let c = ctx(5, 0.3, 0.2);
        for g in enumerate_templates(3).unwrap() {
            for_each_matching(&g, &g, |m| {
                if Overlay::new(&g, &g, m).stats.e_delta == 0 {
                    let r = correlation_check(&g, &g, m, &c).unwrap();
                    assert!(r.ratio <= 1.0 + 1e-12);
                }
            });
        }
    }

    #[test]
    fn check_errors() {
        let e = t(2, &[(0, 1)]);
        let iso = t(4, &[(2, 3)]);
        let m = Matching::new(&e, &iso, &[]).unwrap();
        assert!(matches!(correlation_check(&e, &iso, &m, &ctx(2, 0.2, 0.3)), Err(Error::Precondition(_))));
        let m = Matching::new(&e, &e, &[]).unwrap();
        assert!(matches!(correlation_check(&e, &e, &m, &ctx(2, 0.6, 0.1)), Err(Error::Regime(_))));
        assert!(single_template_check(&t(3, &[(0, 2)]), &ctx(2, 0.2, 0.3)).is_err());
    }

    #[test]
    fn clique_bridge() {
        use crate::num::falling;
        use crate::oracles::clique_mean;
        for m in 3..=6 {
            for &(n, k, l) in &[(20usize, 4usize, 0.3), (50, 7, 0.1)] {
                let g = Template::clique_minus_edge(m).unwrap();
                let c = ctx(k, 0.2, l);
                // P vanishes unless z1 = z2, so conditioning multiplies the mean by K
                let via = k as f64 * expected_p(&g, &c) * falling(n as u64 - 2, m as u64 - 2);
                let direct = clique_mean(n, k, l, m).unwrap();
                assert!((via - direct).abs() <= 1e-12 * direct.abs().max(1.0), "m={m}");
            }
        }
    }
}
