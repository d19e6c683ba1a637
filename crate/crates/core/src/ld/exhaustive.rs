//! Exhaustive check of the correlation inequality over template pairs and matchings.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matching::{for_each_matching, Matching};
use super::moments::{second_moment, CheckKey, LdContext};
use super::template::{enumerate_templates, Template};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub g1: String,
    pub g2: String,
    pub matching: Vec<(usize, usize)>,
    pub context: LdContext,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairSummary {
    pub g1: String,
    pub g2: String,
    /// matchings in 𝓜* for this ordered pair
    pub matchings: u64,
    pub max_ratio_over_bound: f64,
    pub violations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSweep {
    pub d: usize,
    pub templates: usize,
    /// unordered template pairs
    pub pairs: usize,
    /// matchings in 𝓜* over all ordered pairs
    pub matchings: u64,
    pub distinct_keys: usize,
    /// matchings × contexts
    pub checks: u64,
    pub max_ratio_over_bound: f64,
    pub violation_count: u64,
    /// first few violations, for reporting
    pub violations: Vec<Violation>,
    /// one entry per unordered pair
    pub per_pair: Vec<PairSummary>,
}

impl CorrelationSweep {
    pub fn all_hold(&self) -> bool {
        self.violation_count == 0
    }
}

struct Info {
    comps: Vec<u16>,
    iso: [bool; 2],
}

fn info(g: &Template) -> Info {
    let comps = g.components().iter().map(|c| c.iter().fold(0u16, |m, &v| m | 1 << v)).collect();
    Info { comps, iso: [g.anchor_isolated(0), g.anchor_isolated(1)] }
}

fn in_mstar(m: &Matching, a: &Info, b: &Info) -> bool {
    let (mut hit1, mut hit2) = (0u16, 0u16);
    for (x, y) in m.pairs() {
        if x < 2 && (a.iso[x] || b.iso[y]) {
            continue;
        }
        hit1 |= 1 << x;
        hit2 |= 1 << y;
    }
    a.comps.iter().all(|c| c & hit1 != 0) && b.comps.iter().all(|c| c & hit2 != 0)
}

const KEEP_VIOLATIONS: usize = 20;

/// Checks every (G1, G2, M ∈ 𝓜*) with |E| ≤ d at every context. Pairs are taken
/// unordered: swapping the templates leaves ratio and bound unchanged.
pub fn exhaustive_correlation(d: usize, contexts: &[LdContext]) -> Result<CorrelationSweep> {
    if let Some(c) = contexts.iter().find(|c| !c.in_bound_regime()) {
        return Err(Error::Regime(format!("need q <= 1/2 and q + 2 lambda <= 1, got q={}, lambda={}", c.q, c.lambda)));
    }
    let ts = enumerate_templates(d)?;
    let infos: Vec<Info> = ts.iter().map(info).collect();
    let seconds: Vec<Vec<f64>> = ts.iter().map(|g| contexts.iter().map(|c| second_moment(g, c)).collect()).collect();
    let pairs: Vec<(usize, usize)> = (0..ts.len()).flat_map(|i| (i..ts.len()).map(move |j| (i, j))).collect();

    struct Partial {
        summary: PairSummary,
        matchings: u64,
        keys: usize,
        max_ratio: f64,
        count: u64,
        violations: Vec<Violation>,
    }
    let parts: Vec<Partial> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (g1, g2) = (&ts[i], &ts[j]);
            let weight = if i == j { 1 } else { 2 };
            let mut keys: HashSet<CheckKey> = HashSet::new();
            let mut witness: Vec<(CheckKey, Vec<(usize, usize)>)> = Vec::new();
            let mut matchings = 0u64;
            for_each_matching(g1, g2, |m| {
                if !in_mstar(m, &infos[i], &infos[j]) {
                    return;
                }
                matchings += weight;
                let key = CheckKey::new(g1, g2, m);
                if !keys.contains(&key) {
                    witness.push((key.clone(), m.pairs().collect()));
                    keys.insert(key);
                }
            });
            let summary = PairSummary { g1: g1.encoding(), g2: g2.encoding(), matchings: matchings / weight, max_ratio_over_bound: 0.0, violations: 0 };
            let mut p = Partial { summary, matchings, keys: keys.len(), max_ratio: 0.0, count: 0, violations: Vec::new() };
            for (key, pairs) in &witness {
                for (ci, c) in contexts.iter().enumerate() {
                    let r = key.evaluate(seconds[i][ci], seconds[j][ci], c);
                    if r.bound > 0.0 {
                        p.max_ratio = p.max_ratio.max(r.ratio / r.bound);
                    }
                    if !r.holds {
                        p.count += 1;
                        if p.violations.len() < KEEP_VIOLATIONS {
                            p.violations.push(Violation {
                                g1: g1.encoding(),
                                g2: g2.encoding(),
                                matching: pairs.clone(),
                                context: *c,
                                ratio: r.ratio,
                                bound: r.bound,
                            });
                        }
                    }
                }
            }
            p.summary.max_ratio_over_bound = p.max_ratio;
            p.summary.violations = p.count;
            p
        })
        .collect();

    let mut out = CorrelationSweep {
        d,
        templates: ts.len(),
        pairs: pairs.len(),
        matchings: 0,
        distinct_keys: 0,
        checks: 0,
        max_ratio_over_bound: 0.0,
        violation_count: 0,
        violations: Vec::new(),
        per_pair: Vec::with_capacity(parts.len()),
    };
    for p in parts {
        out.per_pair.push(p.summary);
        out.matchings += p.matchings;
        out.distinct_keys += p.keys;
        out.max_ratio_over_bound = out.max_ratio_over_bound.max(p.max_ratio);
        out.violation_count += p.count;
        for v in p.violations {
            if out.violations.len() < KEEP_VIOLATIONS {
                out.violations.push(v);
            }
        }
    }
    out.checks = out.matchings * contexts.len() as u64;
    Ok(out)
}
