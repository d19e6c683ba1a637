//! Model parameters, sampling, the bit-packed adjacency and its centered view.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// (q̄, p̄) = (q(1−q), q(1−q) + λ(1−2q)).
pub fn derived_probs(q: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Param(format!("q must lie in (0,1), got {q}")));
    }
    if !(lambda >= 0.0) || q + lambda > 1.0 + 1e-12 {
        return Err(Error::Param(format!(
            "lambda must satisfy 0 <= lambda <= 1-q, got {lambda} with q={q}"
        )));
    }
    let q_bar = q * (1.0 - q);
    Ok((q_bar, q_bar + lambda * (1.0 - 2.0 * q)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: f64,
    pub lambda: f64,
}

impl SbmParams {
    /// λ = 0 is accepted: it is the null model used by sweeps.
    pub fn new(n: usize, k: usize, q: f64, lambda: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::Param(format!("n must be >= 3, got {n}")));
        }
        if k < 2 || k > n {
            return Err(Error::Param(format!("K must satisfy 2 <= K <= n, got K={k}, n={n}")));
        }
        derived_probs(q, lambda)?;
        Ok(Self { n, k, q, lambda })
    }

    pub fn p(&self) -> f64 {
        (self.q + self.lambda).min(1.0)
    }

    pub fn q_bar(&self) -> f64 {
        self.q * (1.0 - self.q)
    }

    pub fn p_bar(&self) -> f64 {
        self.q_bar() + self.lambda * (1.0 - 2.0 * self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Conditioning {
    Same,
    Diff,
    #[default]
    None,
}

/// Community labels, 0-based (label `c` stands for community `c+1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub k: usize,
    pub z: Vec<u32>,
}

impl Assignment {
    pub fn new(k: usize, z: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = z.iter().find(|&&c| c as usize >= k) {
            return Err(Error::Param(format!("label {bad} out of range for K={k}")));
        }
        Ok(Self { k, z })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Nonempty classes, each sorted, ordered by label.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.z.iter().enumerate() {
            out[c as usize].push(i);
        }
        out.retain(|c| !c.is_empty());
        out
    }
}

/// Symmetric boolean adjacency with zero diagonal, one bit-packed row per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, bits: vec![0; n * words] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(Error::Param(format!("bad edge ({u},{v}) for n={n}")));
            }
            g.add_edge(u, v);
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j, "self-loop");
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] &= !(1 << (j % 64));
        self.bits[j * self.words + i / 64] &= !(1 << (i % 64));
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).sum::<usize>() / 2
    }

    /// Edges (u, v) with u < v in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            !self.has_edge(i, i) && (i + 1..self.n).all(|j| self.has_edge(i, j) == self.has_edge(j, i))
        })
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (u, v) in self.edges() {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for i in 0..self.n {
            let r = find(&mut parent, i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|c| !c.is_empty()).collect()
    }
}

/// Y = Y* − q, computed on the fly from the adjacency bits.
#[derive(Debug, Clone, Copy)]
pub struct CenteredMatrix<'a> {
    pub graph: &'a Graph,
    pub q: f64,
}

pub fn center_adjacency(graph: &Graph, q: f64) -> CenteredMatrix<'_> {
    CenteredMatrix { graph, q }
}

impl CenteredMatrix<'_> {
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if self.graph.has_edge(i, j) {
            1.0 - self.q
        } else {
            -self.q
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
}

#[inline]
fn unit_f64(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Labels from stream 0 of ChaCha8 keyed by `seed`.
pub fn sample_assignment(n: usize, k: usize, seed: u64, condition: Conditioning) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut z: Vec<u32> = (0..n).map(|_| rng.random_range(0..k as u32)).collect();
    if n >= 2 {
        match condition {
            Conditioning::Same => z[1] = z[0],
            Conditioning::Diff => {
                let r = rng.random_range(0..k as u32 - 1);
                z[1] = if r < z[0] { r } else { r + 1 };
            }
            Conditioning::None => {}
        }
    }
    Assignment { k, z }
}

/// Edges given labels. Row `i` reads ChaCha8 stream `i + 1`; the pair (i, j), j > i,
/// uses the (j − i − 1)-th 64-bit word of that stream, so the graph does not
/// depend on scheduling.
pub fn sample_graph_given(params: &SbmParams, z: &Assignment, seed: u64) -> Graph {
    let n = params.n;
    let (p, q) = (params.p(), params.q);
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut nb = Vec::new();
            for j in i + 1..n {
                let prob = if z.z[i] == z.z[j] { p } else { q };
                if unit_f64(rng.random::<u64>()) < prob {
                    nb.push(j);
                }
            }
            nb
        })
        .collect();
    let mut g = Graph::empty(n);
    for (i, nb) in rows.into_iter().enumerate() {
        for j in nb {
            g.add_edge(i, j);
        }
    }
    g
}

/// Only the edges owned by `rows` (pairs (i, j) with i in `rows`, j > i), drawn
/// from the same streams as [`sample_graph_given`]; for rows {0, 1} this yields
/// every edge incident to nodes 0 and 1.
pub fn sample_graph_rows(params: &SbmParams, z: &Assignment, seed: u64, rows: &[usize]) -> Graph {
    let n = params.n;
    let (p, q) = (params.p(), params.q);
    let mut g = Graph::empty(n);
    for &i in rows {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        for j in i + 1..n {
            let prob = if z.z[i] == z.z[j] { p } else { q };
            if unit_f64(rng.random::<u64>()) < prob {
                g.add_edge(i, j);
            }
        }
    }
    g
}

pub fn sample_sbm(params: &SbmParams, seed: u64, condition: Conditioning) -> (Assignment, Graph) {
    let z = sample_assignment(params.n, params.k, seed, condition);
    let g = sample_graph_given(params, &z, seed);
    (z, g)
}

/// x_ij = 1{z_i = z_j} − 1/K.
#[inline]
pub fn membership_value(zi: u32, zj: u32, k: usize) -> f64 {
    if zi == zj {
        1.0 - 1.0 / k as f64
    } else {
        -1.0 / k as f64
    }
}

/// Dense symmetric matrix of x_ij; the diagonal is set to 1 − 1/K.
pub fn membership_target(z: &Assignment, k: usize) -> Vec<Vec<f64>> {
    z.z.iter()
        .map(|&zi| z.z.iter().map(|&zj| membership_value(zi, zj, k)).collect())
        .collect()
}

pub fn write_edge_list<W: Write>(graph: &Graph, mut w: W) -> Result<()> {
    writeln!(w, "n {}", graph.n())?;
    for (u, v) in graph.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
    let mut graph: Option<Graph> = None;
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let mut it = t.split_whitespace();
        match &mut graph {
            None => {
                if it.next() != Some("n") {
                    return Err(perr("expected header `n <count>`".into()));
                }
                let n: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| perr("bad node count".into()))?;
                if it.next().is_some() {
                    return Err(perr("trailing tokens after header".into()));
                }
                graph = Some(Graph::empty(n));
            }
            Some(g) => {
                let mut num = || -> Result<usize> {
                    it.next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| perr(format!("expected `u v`, got `{t}`")))
                };
                let (u, v) = (num()?, num()?);
                if it.next().is_some() {
                    return Err(perr("trailing tokens".into()));
                }
                if u >= v {
                    return Err(perr(format!("edge ({u},{v}) must satisfy u < v")));
                }
                if v >= g.n() {
                    return Err(perr(format!("node {v} out of range for n={}", g.n())));
                }
                if g.has_edge(u, v) {
                    return Err(perr(format!("duplicate edge ({u},{v})")));
                }
                g.add_edge(u, v);
            }
        }
    }
    graph.ok_or(Error::Parse { line: 0, msg: "missing header".into() })
}
