//! gen, stat, recover, ld and regime.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sbmclique::clique::partial_stats;
use sbmclique::ld::{corr_bound, enumerate_templates, exhaustive_correlation, gram_report, CorrBoundReport, CorrelationSweep, LdContext};
use sbmclique::mom::{pair_blocks, MomConfig};
use sbmclique::oracles::regime_report;
use sbmclique::sbm::{read_edge_list, sample_sbm, write_edge_list};
use sbmclique::{center_adjacency, clique_stat, clustering_error, recover as mom_recover, Assignment, Conditioning, Graph, Partition, SbmParams};

use crate::config::{need, need_path, Opts};
use crate::{emit, to_json, CliError};

pub fn parse_condition(s: Option<&str>) -> Result<Conditioning, CliError> {
    match s.unwrap_or("none") {
        "same" => Ok(Conditioning::Same),
        "diff" => Ok(Conditioning::Diff),
        "none" => Ok(Conditioning::None),
        other => Err(CliError::Usage(format!("--condition must be same, diff or none, got `{other}`"))),
    }
}

pub fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let f = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    read_edge_list(BufReader::new(f)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn load_truth(path: &Path) -> Result<Assignment, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let a: Assignment = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(Assignment::new(a.k, a.z)?)
}

pub fn gen(o: &Opts) -> Result<(), CliError> {
    let params = SbmParams::new(need(o.n, "n")?, need(o.k, "K")?, need(o.q, "q")?, need(o.lambda, "lambda")?)?;
    let cond = parse_condition(o.condition.as_deref())?;
    let (z, g) = sample_sbm(&params, o.seed.unwrap_or(0), cond);
    let mut buf = Vec::new();
    write_edge_list(&g, &mut buf)?;
    emit(o.out.as_deref(), &String::from_utf8(buf).expect("ascii edge list"))?;
    if let Some(t) = &o.truth {
        emit(Some(t), &to_json(&z))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct StatOutput {
    i: usize,
    j: usize,
    m: usize,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<f64>>,
}

pub fn stat(o: &Opts) -> Result<(), CliError> {
    let g = load_graph(need_path(&o.graph, "graph")?)?;
    let q = need(o.q, "q")?;
    let (i, j, m) = (o.i.unwrap_or(0), o.j.unwrap_or(1), o.m.unwrap_or(3));
    let y = center_adjacency(&g, q);
    let value = clique_stat(&y, i, j, m, None)?;
    let blocks = match o.l {
        Some(l) => {
            let cfg = MomConfig { m, l: Some(l), k: 2, q, lambda: 0.0, seed: o.seed.unwrap_or(0) };
            let parts = pair_blocks(g.n(), i, j, &cfg)?;
            Some(partial_stats(&y, i, j, m, &parts)?)
        }
        None => None,
    };
    emit(o.out.as_deref(), &to_json(&StatOutput { i, j, m, value, blocks }))
}

/// Result of a recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutput {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub m: usize,
    pub communities: Vec<Vec<usize>>,
    pub error: Option<f64>,
}

pub fn recover(o: &Opts) -> Result<(), CliError> {
    let g = load_graph(need_path(&o.graph, "graph")?)?;
    let cfg = MomConfig {
        m: o.m.unwrap_or(3),
        l: o.l,
        k: need(o.k, "K")?,
        q: need(o.q, "q")?,
        lambda: need(o.lambda, "lambda")?,
        seed: o.seed.unwrap_or(0),
    };
    let y = center_adjacency(&g, cfg.q);
    let (_, part) = mom_recover(&y, &cfg)?;
    let error = match &o.truth {
        Some(t) => {
            let z = load_truth(t)?;
            if z.len() != g.n() {
                return Err(CliError::Usage(format!("truth has {} labels for {} nodes", z.len(), g.n())));
            }
            Some(clustering_error(&part, &Partition::from_assignment(&z))?)
        }
        None => None,
    };
    let out = RecoveryOutput { n: g.n(), k: cfg.k, m: cfg.m, communities: part.classes, error };
    emit(o.out.as_deref(), &to_json(&out))
}

#[derive(Debug, Serialize)]
struct TemplateInfo {
    vertices: usize,
    edges: usize,
    automorphisms: usize,
    connected: bool,
}

#[derive(Debug, Serialize)]
struct LdOutput {
    context: LdContext,
    templates: BTreeMap<String, TemplateInfo>,
    /// Γ keyed by template encodings; omitted above D = 3
    gram: Option<BTreeMap<String, BTreeMap<String, f64>>>,
    gram_max_row_l1: Option<f64>,
    gram_row_l1_bound: Option<f64>,
    gram_checks_hold: Option<bool>,
    /// per unordered pair `g1|g2`: matchings, worst ratio/bound, violations
    correlation: Option<BTreeMap<String, serde_json::Value>>,
    correlation_summary: Option<serde_json::Value>,
    corr_bound: CorrBoundReport,
    notes: Vec<String>,
}

pub const GRAM_MAX_D: usize = 3;

pub fn ld(o: &Opts) -> Result<(), CliError> {
    let d = o.d.unwrap_or(2);
    let ctx = LdContext::new(need(o.n, "n")?, need(o.k, "K")?, need(o.q, "q")?, need(o.lambda, "lambda")?, d, o.cs.unwrap_or(14.0))?;
    let ts = enumerate_templates(d)?;
    let mut notes = Vec::new();
    let templates = ts
        .iter()
        .map(|t| {
            let info = TemplateInfo { vertices: t.nv(), edges: t.ne(), automorphisms: t.aut_count(), connected: t.is_connected() };
            (t.encoding(), info)
        })
        .collect();
    let (mut gram, mut row, mut row_bound, mut gram_ok) = (None, None, None, None);
    if d <= GRAM_MAX_D {
        let r = gram_report(&ts, &ctx)?;
        let mut map: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for p in &r.pairs {
            map.entry(p.g1.clone()).or_default().insert(p.g2.clone(), p.gamma);
        }
        gram_ok = Some(r.all_hold());
        row = Some(r.max_row_l1);
        row_bound = Some(r.row_l1_bound);
        gram = Some(map);
    } else {
        notes.push(format!("Gram matrix skipped above D = {GRAM_MAX_D}"));
    }
    let (mut correlation, mut summary) = (None, None);
    if ctx.in_bound_regime() {
        let sweep: CorrelationSweep = exhaustive_correlation(d, &[ctx])?;
        let mut map = BTreeMap::new();
        for p in &sweep.per_pair {
            let v = serde_json::json!({
                "matchings": p.matchings,
                "max_ratio_over_bound": p.max_ratio_over_bound,
                "violations": p.violations,
            });
            map.insert(format!("{}|{}", p.g1, p.g2), v);
        }
        correlation = Some(map);
        summary = Some(serde_json::json!({
            "pairs": sweep.pairs,
            "matchings": sweep.matchings,
            "max_ratio_over_bound": sweep.max_ratio_over_bound,
            "violations": sweep.violation_count,
        }));
    } else {
        notes.push("correlation checks need q <= 1/2 and q + 2 lambda <= 1".into());
    }
    let out = LdOutput {
        context: ctx,
        templates,
        gram,
        gram_max_row_l1: row,
        gram_row_l1_bound: row_bound,
        gram_checks_hold: gram_ok,
        correlation,
        correlation_summary: summary,
        corr_bound: corr_bound(&ctx)?,
        notes,
    };
    emit(o.out.as_deref(), &to_json(&out))
}

pub fn regime(o: &Opts) -> Result<(), CliError> {
    let r = regime_report(
        need(o.n, "n")?,
        need(o.k, "K")?,
        need(o.q, "q")?,
        need(o.lambda, "lambda")?,
        o.m.unwrap_or(3),
        o.d.unwrap_or(2),
        o.cs.unwrap_or(14.0),
        o.rho.unwrap_or(1.0),
    );
    emit(o.out.as_deref(), &to_json(&r))
}
