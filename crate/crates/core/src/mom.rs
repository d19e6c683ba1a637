//! Median-of-means pairwise estimator, community extraction and clustering error.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clique::{block_partition, clique_stat, partial_stats, BlockPartition};
use crate::error::{Error, Result};
use crate::oracles::{clique_mean, default_blocks};
use crate::sbm::{Assignment, CenteredMatrix, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomConfig {
    pub m: usize,
    /// Number of blocks; `None` means ⌈24 ln n⌉.
    pub l: Option<usize>,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl MomConfig {
    pub fn blocks(&self, n: usize) -> usize {
        self.l.unwrap_or_else(|| default_blocks(n))
    }

    /// Checks that L blocks of [n] \ {i, j} each hold at least m − 2 nodes.
    pub fn validate(&self, n: usize) -> Result<()> {
        let l = self.blocks(n);
        if l == 0 {
            return Err(Error::Param("L must be >= 1".into()));
        }
        if self.m < 3 || n < self.m {
            return Err(Error::Param(format!("need 3 <= m <= n, got m={}, n={n}", self.m)));
        }
        if self.k < 2 {
            return Err(Error::Param("K must be >= 2".into()));
        }
        let min_block = (n - 2) / l;
        if min_block < self.m - 2 {
            return Err(Error::Precondition(format!(
                "L = {l} blocks of [n]\\{{i,j}} have only {min_block} nodes, need m-2 = {}",
                self.m - 2
            )));
        }
        Ok(())
    }

    /// E_12[N]/2 for blocks of `block_size` = N − 2 nodes.
    pub fn threshold(&self, block_size: usize) -> Result<f64> {
        Ok(clique_mean(block_size + 2, self.k, self.lambda, self.m)? / 2.0)
    }
}

/// Seed of the block partition for the unordered pair {i, j}.
pub fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    let (a, b) = (i.min(j) as u64, i.max(j) as u64);
    splitmix(splitmix(seed ^ 0x243f_6a88_85a3_08d3) ^ (a << 32 | b))
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Lower median: sorted index ⌊(len − 1)/2⌋.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Param("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v[(v.len() - 1) / 2])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub median: f64,
    pub threshold: f64,
    pub same: bool,
    #[serde(rename = "K")]
    pub k: usize,
}

impl PairDecision {
    /// x̂_ij ∈ {−1/K, 1 − 1/K}.
    pub fn value(&self) -> f64 {
        f64::from(u8::from(self.same)) - 1.0 / self.k as f64
    }
}

/// Decision from already computed block statistics; strict `>` at the threshold.
pub fn decide(stats: &[f64], threshold: f64, k: usize) -> Result<PairDecision> {
    let median = median(stats)?;
    Ok(PairDecision { median, threshold, same: median > threshold, k })
}

pub fn pair_blocks(n: usize, i: usize, j: usize, cfg: &MomConfig) -> Result<BlockPartition> {
    let l = cfg.blocks(n);
    if l == 1 {
        // a single block is the whole pool whatever the shuffle
        let pool = (0..n).filter(|&u| u != i && u != j).collect();
        return Ok(BlockPartition { excluded: (i, j), blocks: vec![pool] });
    }
    block_partition(n, i, j, l, pair_seed(cfg.seed, i, j))
}

pub fn pair_estimate(y: &CenteredMatrix, i: usize, j: usize, cfg: &MomConfig) -> Result<PairDecision> {
    let n = y.n();
    cfg.validate(n)?;
    if cfg.blocks(n) == 1 {
        let s = clique_stat(y, i, j, cfg.m, None)?;
        return decide(&[s], cfg.threshold(n - 2)?, cfg.k);
    }
    let blocks = pair_blocks(n, i, j, cfg)?;
    let stats = partial_stats(y, i, j, cfg.m, &blocks)?;
    decide(&stats, cfg.threshold(blocks.min_block_size())?, cfg.k)
}

/// X̂ as a graph plus the medians M_ij for i < j (row-major upper triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseEstimate {
    pub xhat: Graph,
    pub medians: Vec<f64>,
}

impl PairwiseEstimate {
    pub fn median_at(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (i.min(j), i.max(j));
        let n = self.xhat.n();
        self.medians[a * n - a * (a + 1) / 2 + (b - a - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub classes: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates a disjoint cover of [n].
    pub fn new(classes: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = classes.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for &u in classes.iter().flatten() {
            if u >= n || seen[u] {
                return Err(Error::Param(format!("classes do not form a disjoint cover (node {u})")));
            }
            seen[u] = true;
        }
        Ok(Self { classes })
    }

    pub fn from_assignment(z: &Assignment) -> Self {
        Self { classes: z.classes() }
    }

    pub fn n(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    pub fn labels(&self) -> Vec<usize> {
        let mut lab = vec![0; self.n()];
        for (c, cls) in self.classes.iter().enumerate() {
            for &u in cls {
                lab[u] = c;
            }
        }
        lab
    }
}

pub fn estimate_pairs(y: &CenteredMatrix, cfg: &MomConfig) -> Result<PairwiseEstimate> {
    let n = y.n();
    cfg.validate(n)?;
    let rows: Vec<Result<Vec<PairDecision>>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| pair_estimate(y, i, j, cfg)).collect())
        .collect();
    let mut xhat = Graph::empty(n);
    let mut medians = Vec::with_capacity(n * (n - 1) / 2);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row?.into_iter().enumerate() {
            if d.same {
                xhat.add_edge(i, i + 1 + off);
            }
            medians.push(d.median);
        }
    }
    Ok(PairwiseEstimate { xhat, medians })
}

/// Connected components of X̂.
pub fn components_of(xhat: &Graph) -> Partition {
    Partition { classes: xhat.components() }
}

pub fn recover(y: &CenteredMatrix, cfg: &MomConfig) -> Result<(PairwiseEstimate, Partition)> {
    let est = estimate_pairs(y, cfg)?;
    let part = components_of(&est.xhat);
    Ok((est, part))
}

/// 1 − (max over label matchings of the total overlap)/n, i.e. (1/2n)·min Σ|C* △ Ĉ|.
pub fn clustering_error(est: &Partition, truth: &Partition) -> Result<f64> {
    let n = truth.n();
    if est.n() != n {
        return Err(Error::Param(format!("partitions cover {} and {n} nodes", est.n())));
    }
    Partition::new(est.classes.clone())?;
    Partition::new(truth.classes.clone())?;
    if n == 0 {
        return Ok(0.0);
    }
    let (small, large) = if est.classes.len() <= truth.classes.len() { (est, truth) } else { (truth, est) };
    let large_lab = large.labels();
    let mut overlap = Matrix::new(small.classes.len(), large.classes.len(), 0i64);
    for (r, cls) in small.classes.iter().enumerate() {
        for &u in cls {
            overlap[(r, large_lab[u])] += 1;
        }
    }
    let (best, _) = kuhn_munkres(&overlap);
    Ok(1.0 - best as f64 / n as f64)
}
