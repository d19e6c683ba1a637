//! The centered clique-minus-edge statistic S_ij and its block-restricted versions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::KahanSum;
use crate::sbm::CenteredMatrix;

pub const MAX_M: usize = 8;

/// K_m on vertices 0..m with the edge (0, 1) removed; 0 and 1 are the anchors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueTemplate {
    pub m: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn clique_template(m: usize) -> Result<CliqueTemplate> {
    if m < 3 {
        return Err(Error::Param(format!("clique size must be >= 3, got {m}")));
    }
    let mut edges = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if (a, b) != (0, 1) {
                edges.push((a, b));
            }
        }
    }
    Ok(CliqueTemplate { m, edges })
}

fn check_m(m: usize) -> Result<()> {
    if !(3..=MAX_M).contains(&m) {
        return Err(Error::Param(format!("clique size must lie in 3..={MAX_M}, got {m}")));
    }
    Ok(())
}

fn validate_pool(n: usize, i: usize, j: usize, pool: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &u in pool {
        if u >= n || u == i || u == j || seen[u] {
            return Err(Error::Precondition(format!("invalid pool node {u}")));
        }
        seen[u] = true;
    }
    Ok(())
}

/// S_ij summed over injections of the m−2 free template nodes into `pool`
/// (default: every node except i and j).
pub fn clique_stat(y: &CenteredMatrix, i: usize, j: usize, m: usize, pool: Option<&[usize]>) -> Result<f64> {
    check_m(m)?;
    let n = y.n();
    if i == j || i >= n || j >= n {
        return Err(Error::Precondition(format!("need distinct in-range anchors, got ({i},{j})")));
    }
    if pool.is_none() && m == 3 && n >= 3 {
        return Ok(triangle_full(y, i, j));
    }
    let owned;
    let pool = match pool {
        Some(p) => {
            validate_pool(n, i, j, p)?;
            p
        }
        None => {
            owned = (0..n).filter(|&u| u != i && u != j).collect::<Vec<_>>();
            &owned
        }
    };
    if pool.len() < m - 2 {
        return Err(Error::Precondition(format!(
            "pool has {} nodes, need at least {}",
            pool.len(),
            m - 2
        )));
    }
    if m == 3 {
        Ok(triangle_path(y, i, j, pool))
    } else {
        Ok(generic_path(y, i, j, m, pool))
    }
}

/// Σ_k (a_ik − q)(a_jk − q) = c − q(d_i + d_j) + q²|P| with integer counts from the bitsets.
fn triangle_path(y: &CenteredMatrix, i: usize, j: usize, pool: &[usize]) -> f64 {
    let g = y.graph;
    let mut mask = vec![0u64; g.words_per_row()];
    for &u in pool {
        mask[u / 64] |= 1 << (u % 64);
    }
    let (ri, rj) = (g.row(i), g.row(j));
    let (mut c, mut di, mut dj) = (0u64, 0u64, 0u64);
    for w in 0..mask.len() {
        let (a, b) = (ri[w] & mask[w], rj[w] & mask[w]);
        c += (a & b).count_ones() as u64;
        di += a.count_ones() as u64;
        dj += b.count_ones() as u64;
    }
    let q = y.q;
    c as f64 - q * (di + dj) as f64 + q * q * pool.len() as f64
}

/// The m = 3 statistic over every node except i and j, straight from the rows.
fn triangle_full(y: &CenteredMatrix, i: usize, j: usize) -> f64 {
    let g = y.graph;
    let (ri, rj) = (g.row(i), g.row(j));
    // no self-loops, so i and j never appear among common neighbours
    let c: u64 = ri.iter().zip(rj).map(|(a, b)| (a & b).count_ones() as u64).sum();
    let aij = g.has_edge(i, j) as usize;
    let (di, dj) = (g.degree(i) - aij, g.degree(j) - aij);
    let q = y.q;
    c as f64 - q * (di + dj) as f64 + q * q * (g.n() - 2) as f64
}

fn generic_path(y: &CenteredMatrix, i: usize, j: usize, m: usize, pool: &[usize]) -> f64 {
    let p = pool.len();
    let free = m - 2;
    // anchor factor Y_iu Y_ju and the pool-restricted matrix
    let anchor: Vec<f64> = pool.iter().map(|&u| y.entry(i, u) * y.entry(j, u)).collect();
    let local: Vec<f64> = pool
        .iter()
        .flat_map(|&u| pool.iter().map(move |&v| if u == v { 0.0 } else { y.entry(u, v) }))
        .collect();
    let shards: Vec<KahanSum> = (0..p)
        .into_par_iter()
        .map(|first| {
            let mut acc = KahanSum::new();
            let mut chosen = Vec::with_capacity(free);
            chosen.push(first);
            extend(&anchor, &local, p, free, &mut chosen, anchor[first], &mut acc);
            acc
        })
        .collect();
    let mut total = KahanSum::new();
    for s in &shards {
        total.merge(s);
    }
    total.value()
}

fn extend(
    anchor: &[f64],
    local: &[f64],
    p: usize,
    free: usize,
    chosen: &mut Vec<usize>,
    prod: f64,
    acc: &mut KahanSum,
) {
    if chosen.len() == free {
        acc.add(prod);
        return;
    }
    for u in 0..p {
        if chosen.contains(&u) {
            continue;
        }
        let mut f = prod * anchor[u];
        for &w in chosen.iter() {
            f *= local[w * p + u];
        }
        chosen.push(u);
        extend(anchor, local, p, free, chosen, f, acc);
        chosen.pop();
    }
}

/// Blocks J^(1..L) covering [n] \ {i, j}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub excluded: (usize, usize),
    pub blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn min_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// Seeded shuffle of [n] \ {i, j}, then contiguous chunks; the first (n−2) mod L
/// blocks receive the extra node.
pub fn block_partition(n: usize, i: usize, j: usize, l: usize, seed: u64) -> Result<BlockPartition> {
    if l == 0 {
        return Err(Error::Param("number of blocks must be >= 1".into()));
    }
    if i == j || i >= n || j >= n {
        return Err(Error::Precondition(format!("need distinct in-range anchors, got ({i},{j})")));
    }
    let rest = n - 2;
    if l > rest {
        return Err(Error::Param(format!("{l} blocks exceed the {rest} available nodes")));
    }
    let mut nodes: Vec<usize> = (0..n).filter(|&u| u != i && u != j).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nodes.shuffle(&mut rng);
    let (base, extra) = (rest / l, rest % l);
    let mut blocks = Vec::with_capacity(l);
    let mut start = 0;
    for b in 0..l {
        let size = base + usize::from(b < extra);
        blocks.push(nodes[start..start + size].to_vec());
        start += size;
    }
    Ok(BlockPartition { excluded: (i, j), blocks })
}

pub fn partial_stats(y: &CenteredMatrix, i: usize, j: usize, m: usize, blocks: &BlockPartition) -> Result<Vec<f64>> {
    let (a, b) = blocks.excluded;
    if (a, b) != (i, j) && (a, b) != (j, i) {
        return Err(Error::Precondition("block partition excludes a different pair".into()));
    }
    blocks
        .blocks
        .iter()
        .map(|blk| {
            if blk.len() < m - 2 {
                return Err(Error::Precondition(format!(
                    "block of size {} is smaller than m-2 = {}",
                    blk.len(),
                    m - 2
                )));
            }
            clique_stat(y, i, j, m, Some(blk))
        })
        .collect()
}
