//! Gram matrix of the normalized basis Ψ_G and the resulting correlation bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::{component_edges1, for_each_matching, Overlay};
use super::moments::{edge_moment, expected_p, second_moment, LdContext};
use super::template::Template;
use crate::error::{Error, Result};
use crate::num::{falling, ln_falling, KahanSum};
use crate::sbm::CenteredMatrix;

/// Upper limit on matchings visited for a single Gram entry.
pub const GRAM_BUDGET: f64 = 5e6;

/// 𝕍(G) = (n−2)!/(n−|V|)! · |Aut(G)| · E[P_{G,π}²].
pub fn variance_proxy(g: &Template, ctx: &LdContext) -> f64 {
    falling(ctx.n as u64 - 2, g.nv() as u64 - 2) * g.aut_count() as f64 * second_moment(g, ctx)
}

fn matching_count(a: usize, b: usize) -> f64 {
    let mut s = 0.0;
    let mut c = 1.0;
    for k in 0..=a.min(b) {
        if k > 0 {
            c *= ((a - k + 1) * (b - k + 1)) as f64 / k as f64;
        }
        s += c;
    }
    s
}

fn subset_edges(comps: &[Vec<(u8, u8)>], mask: u32, inside: bool) -> Vec<(u8, u8)> {
    comps
        .iter()
        .enumerate()
        .filter(|(i, _)| (mask >> i & 1 == 1) == inside)
        .flat_map(|(_, c)| c.iter().copied())
        .collect()
}

/// E[P̄_{G1,π1} P̄_{G2,π2}] for (π1, π2) ∈ Π(M), by inclusion–exclusion over
/// the edge-bearing components of each template.
pub fn centered_cross_moment(g1: &Template, g2: &Template, ov: &Overlay, ctx: &LdContext) -> f64 {
    let c1 = component_edges1(g1);
    let c2 = ov.component_edges2(g2);
    let mut acc = KahanSum::new();
    for s1 in 0u32..1 << c1.len() {
        for s2 in 0u32..1 << c2.len() {
            let sign = if (s1.count_ones() + s2.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            let joint = edge_moment(&subset_edges(&c1, s1, false), &subset_edges(&c2, s2, false), ctx);
            let m1 = edge_moment(&subset_edges(&c1, s1, true), &[], ctx);
            let m2 = edge_moment(&subset_edges(&c2, s2, true), &[], ctx);
            acc.add(sign * joint * m1 * m2);
        }
    }
    acc.value()
}

/// Γ_{G1,G2} = E[Ψ_{G1} Ψ_{G2}], exact.
pub fn gram_entry(g1: &Template, g2: &Template, ctx: &LdContext) -> Result<f64> {
    let count = matching_count(g1.nv() - 2, g2.nv() - 2);
    if count > GRAM_BUDGET {
        return Err(Error::Budget(format!("{count:e} matchings for ({}, {})", g1.encoding(), g2.encoding())));
    }
    let mut acc = KahanSum::new();
    for_each_matching(g1, g2, |m| {
        if !m.in_mstar(g1, g2) {
            return;
        }
        let ov = Overlay::new(g1, g2, m);
        if ov.nu > ctx.n {
            return;
        }
        let labelings = falling(ctx.n as u64 - 2, ov.nu as u64 - 2);
        acc.add(labelings * centered_cross_moment(g1, g2, &ov, ctx));
    });
    Ok(acc.value() / (variance_proxy(g1, ctx) * variance_proxy(g2, ctx)).sqrt())
}

/// Full Gram matrix over a template list, rows computed in parallel.
pub fn gram_matrix(templates: &[Template], ctx: &LdContext) -> Result<Vec<Vec<f64>>> {
    let rows: Vec<Result<Vec<f64>>> = (0..templates.len())
        .into_par_iter()
        .map(|i| (0..templates.len()).map(|j| gram_entry(&templates[i], &templates[j], ctx)).collect())
        .collect();
    rows.into_iter().collect()
}

/// Per-pair near-identity check: |Γ − 1{G1=G2}| ≤ 3 D^{−c_s·max(d,1)}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramPairCheck {
    pub g1: String,
    pub g2: String,
    pub gamma: f64,
    pub edit_distance: usize,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramReport {
    pub context: LdContext,
    pub templates: Vec<String>,
    pub gram: Vec<Vec<f64>>,
    pub pairs: Vec<GramPairCheck>,
    pub max_row_l1: f64,
    pub row_l1_bound: f64,
    pub row_l1_holds: bool,
}

impl GramReport {
    pub fn all_hold(&self) -> bool {
        self.row_l1_holds && self.pairs.iter().all(|p| p.holds)
    }
}

pub fn gram_report(templates: &[Template], ctx: &LdContext) -> Result<GramReport> {
    let gram = gram_matrix(templates, ctx)?;
    let d = ctx.d as f64;
    let mut pairs = Vec::new();
    let mut max_row_l1: f64 = 0.0;
    for (i, a) in templates.iter().enumerate() {
        let mut row = 0.0;
        for (j, b) in templates.iter().enumerate() {
            let dev = gram[i][j] - if i == j { 1.0 } else { 0.0 };
            row += dev.abs();
            let dist = super::matching::edit_distance(a, b);
            let bound = 3.0 * d.powf(-ctx.c_s * dist.max(1) as f64);
            pairs.push(GramPairCheck {
                g1: a.encoding(),
                g2: b.encoding(),
                gamma: gram[i][j],
                edit_distance: dist,
                bound,
                holds: dev.abs() <= bound,
            });
        }
        max_row_l1 = max_row_l1.max(row);
    }
    let row_l1_bound = 6.0 * d.powf(-ctx.c_s / 2.0);
    Ok(GramReport {
        context: *ctx,
        templates: templates.iter().map(Template::encoding).collect(),
        gram,
        pairs,
        max_row_l1,
        row_l1_bound,
        row_l1_holds: max_row_l1 <= row_l1_bound,
    })
}

/// E[x_12 Ψ_G] in closed form: (1 − 1/K) √((n−2)!/((n−|V|)! |Aut|)) E[P]/√E[P²] for
/// connected G, zero otherwise.
pub fn x_psi(g: &Template, ctx: &LdContext) -> f64 {
    if !g.is_connected() {
        return 0.0;
    }
    let k = ctx.k as f64;
    let inj = falling(ctx.n as u64 - 2, g.nv() as u64 - 2);
    (1.0 - 1.0 / k) * (inj / g.aut_count() as f64).sqrt() * expected_p(g, ctx) / second_moment(g, ctx).sqrt()
}

/// ln |E[x_12 Ψ_G]|, or −∞ when it vanishes. Stays finite where `x_psi` underflows.
pub fn ln_x_psi(g: &Template, ctx: &LdContext) -> f64 {
    if !g.is_connected() || ctx.lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    let k = ctx.k as f64;
    let rank = g.nv() as f64 - 1.0;
    (1.0 - 1.0 / k).ln() + 0.5 * (ln_falling(ctx.n as u64 - 2, g.nv() as u64 - 2) - (g.aut_count() as f64).ln())
        + g.ne() as f64 * ctx.lambda.ln()
        - rank * k.ln()
        - 0.5 * second_moment(g, ctx).ln()
}

/// E[x_12 Ψ_G] expanded over component subsets, valid for any template.
/// The indicator 1{z1 = z2} acts as an extra λ-free edge between the anchors.
pub fn x_psi_expanded(g: &Template, ctx: &LdContext) -> f64 {
    let comps = component_edges1(g);
    let k = ctx.k as f64;
    let with_anchor = |edges: &[(u8, u8)]| -> f64 {
        let rank = super::matching::forest_rank(edges.iter().copied().chain([(0u8, 1u8)]));
        ctx.lambda.powi(edges.len() as i32) * k.powi(-(rank as i32))
    };
    let mut acc = KahanSum::new();
    for s in 0u32..1 << comps.len() {
        let sign = if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let kept = subset_edges(&comps, s, false);
        let removed = subset_edges(&comps, s, true);
        let m = edge_moment(&removed, &[], ctx);
        // E[(1{z1=z2} − 1/K) P_kept] E[P_removed]
        acc.add(sign * (with_anchor(&kept) - edge_moment(&kept, &[], ctx) / k) * m);
    }
    let inj = falling(ctx.n as u64 - 2, g.nv() as u64 - 2);
    inj * acc.value() / variance_proxy(g, ctx).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XPsiTerm {
    pub template: String,
    pub x_psi: f64,
    pub ln_x_psi_sq: f64,
    /// ln of (1/n)·[min((n/K²)(λ²/q̄)^r, (n/K)λ^r)]^{|V|−1}, r = |E|/(|V|−1)
    pub ln_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrBoundReport {
    pub context: LdContext,
    pub value: f64,
    pub ln_value: f64,
    pub normalization: f64,
    pub guarantee: f64,
    pub ln_guarantee: f64,
    pub holds: bool,
    pub terms: Vec<XPsiTerm>,
}

fn ln_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Σ_{G connected, |E| ≤ D} E[xΨ_G]² / (1 − 6 D^{−c_s/2}), compared with (4/n) D^{−15 c_s}.
pub fn corr_bound(ctx: &LdContext) -> Result<CorrBoundReport> {
    let d = ctx.d as f64;
    let normalization = 1.0 - 6.0 * d.powf(-ctx.c_s / 2.0);
    if normalization <= 0.0 {
        return Err(Error::Regime(format!("invalid normalization 1 - 6 D^(-c_s/2) = {normalization}")));
    }
    let n = ctx.n as f64;
    let k = ctx.k as f64;
    let ln_qb = ctx.q_bar().ln();
    let mut terms = Vec::new();
    for g in super::template::enumerate_templates(ctx.d)?.into_iter().filter(Template::is_connected) {
        let ln_sq = 2.0 * ln_x_psi(&g, ctx);
        let r = g.density();
        let a = n.ln() - 2.0 * k.ln() + r * (2.0 * ctx.lambda.ln() - ln_qb);
        let b = n.ln() - k.ln() + r * ctx.lambda.ln();
        let ln_bound = -n.ln() + (g.nv() as f64 - 1.0) * a.min(b);
        terms.push(XPsiTerm {
            template: g.encoding(),
            x_psi: x_psi(&g, ctx),
            ln_x_psi_sq: ln_sq,
            ln_bound,
            holds: ln_sq <= ln_bound + 1e-9 * ln_bound.abs().max(1.0),
        });
    }
    let ln_value = ln_sum_exp(&terms.iter().map(|t| t.ln_x_psi_sq).collect::<Vec<_>>()) - normalization.ln();
    let ln_guarantee = (4.0 / n).ln() - 15.0 * ctx.c_s * d.ln();
    Ok(CorrBoundReport {
        context: *ctx,
        value: ln_value.exp(),
        ln_value,
        normalization,
        guarantee: ln_guarantee.exp(),
        ln_guarantee,
        holds: ln_value <= ln_guarantee,
        terms,
    })
}

/// P̄_G evaluated on a centered adjacency matrix by summing over all injections
/// with the anchors sent to nodes 0 and 1.
pub fn centered_polynomial(g: &Template, y: &CenteredMatrix<'_>, ctx: &LdContext) -> f64 {
    let comps = component_edges1(g);
    let means: Vec<f64> = comps.iter().map(|c| edge_moment(c, &[], ctx)).collect();
    let n = y.n();
    let mut map = vec![0usize; g.nv()];
    map[0] = 0;
    map[1] = 1;
    let mut used = vec![false; n];
    used[0] = true;
    used[1] = true;
    let mut acc = KahanSum::new();
    fn rec(
        v: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        comps: &[Vec<(u8, u8)>],
        means: &[f64],
        y: &CenteredMatrix<'_>,
        acc: &mut KahanSum,
    ) {
        if v == map.len() {
            let mut prod = 1.0;
            for (c, mu) in comps.iter().zip(means) {
                let p: f64 = c.iter().map(|&(a, b)| y.entry(map[a as usize], map[b as usize])).product();
                prod *= p - mu;
            }
            acc.add(prod);
            return;
        }
        for w in 2..used.len() {
            if !used[w] {
                used[w] = true;
                map[v] = w;
                rec(v + 1, map, used, comps, means, y, acc);
                used[w] = false;
            }
        }
    }
    rec(2, &mut map, &mut used, &comps, &means, y, &mut acc);
    acc.value()
}

/// Ψ_G = P̄_G / √𝕍(G) on an observed graph.
pub fn psi_value(g: &Template, y: &CenteredMatrix<'_>, ctx: &LdContext) -> f64 {
    centered_polynomial(g, y, ctx) / variance_proxy(g, ctx).sqrt()
}
