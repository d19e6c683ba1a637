//! Clustering error over a λ grid.
//!
//! Replicate r uses the same seed at every grid point, so graphs at larger λ
//! contain the edges drawn at smaller λ (common random numbers).

use rayon::prelude::*;

use sbmclique::mom::estimate_pairs;
use sbmclique::num::mean_sd;
use sbmclique::oracles::regime_report;
use sbmclique::sbm::sample_sbm;
use sbmclique::{center_adjacency, clustering_error, mom::components_of, Conditioning, MomConfig, Partition, SbmParams};

use crate::config::{need, parse_grid, Opts};
use crate::{emit, CliError};

pub const HEADER: &str = "lambda,q,K,n,m,L,R,err_mean,err_sd,pair_success_rate,cond1,cond2,cond_lambda";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    pub q: f64,
    pub m: usize,
    pub l: Option<usize>,
    pub reps: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub l: usize,
    /// None when the point is infeasible
    pub err_mean: Option<f64>,
    pub err_sd: Option<f64>,
    pub pair_success_rate: Option<f64>,
    pub errors: Vec<f64>,
    pub cond1: bool,
    pub cond2: bool,
    pub cond_lambda: bool,
}

pub fn rep_seed(seed: u64, r: usize) -> u64 {
    let mut x = seed ^ (r as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// (clustering error, fraction of pairs with x̂_ij = x_ij) for one replicate.
fn one_rep(params: &SbmParams, cfg: &MomConfig, seed: u64) -> sbmclique::Result<(f64, f64)> {
    let (z, g) = sample_sbm(params, seed, Conditioning::None);
    let y = center_adjacency(&g, params.q);
    let est = estimate_pairs(&y, cfg)?;
    let part = components_of(&est.xhat);
    let err = clustering_error(&part, &Partition::from_assignment(&z))?;
    let n = params.n;
    let mut right = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            right += u64::from(est.xhat.has_edge(i, j) == (z.z[i] == z.z[j]));
        }
    }
    Ok((err, right as f64 / (n * (n - 1) / 2) as f64))
}

pub fn sweep_rows(c: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    if c.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(c.grid.len());
    for &lambda in &c.grid {
        let cfg = MomConfig { m: c.m, l: c.l, k: c.k, q: c.q, lambda, seed: 0 };
        let l = cfg.blocks(c.n);
        let report = regime_report(c.n, c.k, c.q, lambda, c.m, 2, 14.0, 1.0);
        let mut row = SweepRow {
            lambda,
            l,
            err_mean: None,
            err_sd: None,
            pair_success_rate: None,
            errors: Vec::new(),
            cond1: report.cond1_mom.holds,
            cond2: report.cond2_mom.holds,
            cond_lambda: report.lambda_cap.holds,
        };
        let params = SbmParams::new(c.n, c.k, c.q, lambda);
        if let (Ok(params), Ok(())) = (params, cfg.validate(c.n)) {
            let res: Vec<sbmclique::Result<(f64, f64)>> = (0..c.reps)
                .into_par_iter()
                .map(|r| {
                    let s = rep_seed(c.seed, r);
                    one_rep(&params, &MomConfig { seed: s, ..cfg }, s)
                })
                .collect();
            if let Ok(res) = res.into_iter().collect::<sbmclique::Result<Vec<_>>>() {
                let errors: Vec<f64> = res.iter().map(|x| x.0).collect();
                let (mean, sd) = mean_sd(&errors);
                row.err_mean = Some(mean);
                row.err_sd = Some(if errors.len() > 1 { sd } else { 0.0 });
                row.pair_success_rate = Some(res.iter().map(|x| x.1).sum::<f64>() / res.len() as f64);
                row.errors = errors;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

pub fn to_csv(c: &SweepConfig, rows: &[SweepRow]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.lambda,
            c.q,
            c.k,
            c.n,
            c.m,
            r.l,
            c.reps,
            cell(r.err_mean),
            cell(r.err_sd),
            cell(r.pair_success_rate),
            r.cond1,
            r.cond2,
            r.cond_lambda
        ));
    }
    s
}

pub fn cmd_sweep(o: &Opts) -> Result<(), CliError> {
    let c = SweepConfig {
        n: need(o.n, "n")?,
        k: need(o.k, "K")?,
        q: need(o.q, "q")?,
        m: o.m.unwrap_or(3),
        l: o.l,
        reps: o.reps.unwrap_or(10),
        seed: o.seed.unwrap_or(0),
        grid: parse_grid(o.grid.as_deref().ok_or_else(|| CliError::Usage("missing --grid".into()))?)?,
    };
    if c.k < 2 || c.k > c.n || !(c.q > 0.0 && c.q < 1.0) {
        return Err(CliError::Usage(format!("need 2 <= K <= n and 0 < q < 1, got K={}, n={}, q={}", c.k, c.n, c.q)));
    }
    let rows = sweep_rows(&c)?;
    emit(o.out.as_deref(), &to_csv(&c, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(grid: Vec<f64>) -> SweepConfig {
        SweepConfig { n: 40, k: 2, q: 0.1, m: 3, l: Some(1), reps: 3, seed: 5, grid }
    }

    #[test]
    fn rows_match_grid_and_flag_infeasible() {
        let c = cfg(vec![0.0, 0.5, 0.95]);
        let rows = sweep_rows(&c).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].err_mean.is_some());
        // q + λ > 1
        assert!(rows[2].err_mean.is_none());
        let csv = to_csv(&c, &rows);
        assert_eq!(csv.lines().next().unwrap(), HEADER);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().contains("NA"));
    }

    #[test]
    fn blocks_too_small_are_flagged() {
        let mut c = cfg(vec![0.3]);
        c.l = Some(39);
        c.m = 4;
        let rows = sweep_rows(&c).unwrap();
        assert!(rows[0].err_mean.is_none());
    }

    #[test]
    fn deterministic() {
        let c = cfg(vec![0.2, 0.6]);
        assert_eq!(to_csv(&c, &sweep_rows(&c).unwrap()), to_csv(&c, &sweep_rows(&c).unwrap()));
    }
}
