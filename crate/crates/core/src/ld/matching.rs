//! Node matchings between two anchored templates and the overlay graphs they induce.

use serde::{Deserialize, Serialize};

use super::template::{Template, MAX_NODES};
use crate::error::{Error, Result};

const NONE: u8 = u8::MAX;

/// Pairs (v1, v2) of nodes of two templates. The anchor pairs (0,0) and (1,1)
/// are always present, non-anchors are only matched to non-anchors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(u8, u8)>,
}

impl Matching {
    /// Builds a matching from its non-anchor pairs; anchors are added.
    pub fn new(g1: &Template, g2: &Template, extra: &[(usize, usize)]) -> Result<Self> {
        let mut used1 = [false; MAX_NODES];
        let mut used2 = [false; MAX_NODES];
        let mut pairs = vec![(0u8, 0u8), (1, 1)];
        for &(a, b) in extra {
            if a < 2 || b < 2 || a >= g1.nv() || b >= g2.nv() {
                return Err(Error::Param(format!("bad matched pair ({a},{b})")));
            }
            if used1[a] || used2[b] {
                return Err(Error::Param(format!("node repeated in matched pair ({a},{b})")));
            }
            used1[a] = true;
            used2[b] = true;
            pairs.push((a as u8, b as u8));
        }
        pairs[2..].sort_unstable();
        Ok(Matching { pairs })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs kept after dropping anchor pairs where the anchor is isolated on either side.
    pub fn pruned(&self, g1: &Template, g2: &Template) -> Vec<(usize, usize)> {
        self.pairs()
            .filter(|&(a, b)| !(a < 2 && (g1.anchor_isolated(a) || g2.anchor_isolated(b))))
            .collect()
    }

    /// Every edge-bearing component of both templates meets the pruned matching.
    pub fn in_mstar(&self, g1: &Template, g2: &Template) -> bool {
        let pruned = self.pruned(g1, g2);
        let hit1: Vec<usize> = pruned.iter().map(|p| p.0).collect();
        let hit2: Vec<usize> = pruned.iter().map(|p| p.1).collect();
        g1.components().iter().all(|c| c.iter().any(|v| hit1.contains(v)))
            && g2.components().iter().all(|c| c.iter().any(|v| hit2.contains(v)))
    }
}

/// Calls `f` on every matching of (g1, g2), in a fixed order.
pub fn for_each_matching<F: FnMut(&Matching)>(g1: &Template, g2: &Template, mut f: F) {
    let mut m = Matching { pairs: vec![(0, 0), (1, 1)] };
    let mut used = [false; MAX_NODES];
    rec(g1, g2, 2, &mut m, &mut used, &mut f);
}

fn rec<F: FnMut(&Matching)>(g1: &Template, g2: &Template, v: usize, m: &mut Matching, used: &mut [bool; MAX_NODES], f: &mut F) {
    if v == g1.nv() {
        f(m);
        return;
    }
    rec(g1, g2, v + 1, m, used, f);
    for w in 2..g2.nv() {
        if !used[w] {
            used[w] = true;
            m.pairs.push((v as u8, w as u8));
            rec(g1, g2, v + 1, m, used, f);
            m.pairs.pop();
            used[w] = false;
        }
    }
}

pub fn all_matchings(g1: &Template, g2: &Template) -> Vec<Matching> {
    let mut out = Vec::new();
    for_each_matching(g1, g2, |m| out.push(m.clone()));
    out
}

/// Size of the spanning forest of an edge list over at most 32 nodes, i.e. |V(F)| − #CC(F).
pub fn forest_rank<I: IntoIterator<Item = (u8, u8)>>(edges: I) -> u32 {
    let mut parent: [u8; 32] = std::array::from_fn(|i| i as u8);
    fn find(p: &mut [u8; 32], mut x: u8) -> u8 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    let mut rank = 0;
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra as usize] = rb;
            rank += 1;
        }
    }
    rank
}

/// Both templates drawn on the common node set of a labeling in Π(M).
/// Nodes of g1 keep their index; unmatched nodes of g2 come after them.
#[derive(Debug, Clone)]
pub struct Overlay {
    pub nu: usize,
    pub label2: Vec<u8>,
    pub e1: Vec<(u8, u8)>,
    pub e2: Vec<(u8, u8)>,
    pub e_cap: Vec<(u8, u8)>,
    pub e_delta: Vec<(u8, u8)>,
    pub stats: MatchingStats,
}

/// Counts attached to a matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MatchingStats {
    pub m: usize,
    pub u1: usize,
    pub u2: usize,
    pub v_union: usize,
    pub e_cap: usize,
    pub e_delta: usize,
    pub v_delta: usize,
    pub m_sm: usize,
    pub m_pm: usize,
    pub cc_delta: usize,
}

fn norm(a: u8, b: u8) -> (u8, u8) {
    (a.min(b), a.max(b))
}

impl Overlay {
    pub fn new(g1: &Template, g2: &Template, m: &Matching) -> Self {
        let mut label2 = vec![NONE; g2.nv()];
        for (a, b) in m.pairs() {
            label2[b] = a as u8;
        }
        let mut next = g1.nv() as u8;
        for l in label2.iter_mut() {
            if *l == NONE {
                *l = next;
                next += 1;
            }
        }
        let nu = next as usize;
        let mut e1: Vec<(u8, u8)> = g1.edges().map(|(a, b)| (a as u8, b as u8)).collect();
        let mut e2: Vec<(u8, u8)> = g2.edges().map(|(a, b)| norm(label2[a], label2[b])).collect();
        e1.sort_unstable();
        e2.sort_unstable();
        let e_cap: Vec<(u8, u8)> = e1.iter().filter(|e| e2.binary_search(e).is_ok()).copied().collect();
        let mut e_delta: Vec<(u8, u8)> = e1
            .iter()
            .filter(|e| e2.binary_search(e).is_err())
            .chain(e2.iter().filter(|e| e1.binary_search(e).is_err()))
            .copied()
            .collect();
        e_delta.sort_unstable();

        let mut touched = 0u32;
        for &(a, b) in &e_delta {
            touched |= 1 << a | 1 << b;
        }
        let v_delta = touched.count_ones() as usize;
        let m_sm = m.pairs().filter(|&(a, _)| touched >> a & 1 == 1).count();
        let cc_delta = v_delta - forest_rank(e_delta.iter().copied()) as usize;
        let stats = MatchingStats {
            m: m.len(),
            u1: g1.nv() - m.len(),
            u2: g2.nv() - m.len(),
            v_union: nu,
            e_cap: e_cap.len(),
            e_delta: e_delta.len(),
            v_delta,
            m_sm,
            m_pm: m.len() - m_sm,
            cc_delta,
        };
        Overlay { nu, label2, e1, e2, e_cap, e_delta, stats }
    }

    /// Edges of g2 components, relabeled onto the overlay.
    pub fn component_edges2(&self, g2: &Template) -> Vec<Vec<(u8, u8)>> {
        g2.components()
            .iter()
            .map(|c| {
                g2.edges()
                    .filter(|(a, _)| c.contains(a))
                    .map(|(a, b)| norm(self.label2[a], self.label2[b]))
                    .collect()
            })
            .collect()
    }
}

pub fn component_edges1(g1: &Template) -> Vec<Vec<(u8, u8)>> {
    g1.components()
        .iter()
        .map(|c| g1.edges().filter(|(a, _)| c.contains(a)).map(|(a, b)| (a as u8, b as u8)).collect())
        .collect()
}

/// min over matchings of |E_Δ|.
pub fn edit_distance(g1: &Template, g2: &Template) -> usize {
    let mut best = usize::MAX;
    for_each_matching(g1, g2, |m| best = best.min(Overlay::new(g1, g2, m).stats.e_delta));
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ld::enumerate_templates;

    fn t(nv: usize, e: &[(usize, usize)]) -> Template {
        Template::new(nv, e).unwrap()
    }

    #[test]
    fn matching_counts() {
        // a, b non-anchors: Σ_k C(a,k) C(b,k) k!
        let g = t(4, &[(2, 3)]);
        assert_eq!(all_matchings(&g, &g).len(), 7);
        let e = t(2, &[(0, 1)]);
        assert_eq!(all_matchings(&e, &g).len(), 1);
        assert!(all_matchings(&g, &g).iter().all(|m| m.pairs().take(2).eq([(0, 0), (1, 1)])));
    }

    #[test]
    fn identities_hold_on_all_small_pairs() {
        let ts = enumerate_templates(3).unwrap();
        for g1 in &ts {
            for g2 in ts.iter().step_by(3) {
                for_each_matching(g1, g2, |m| {
                    let s = Overlay::new(g1, g2, m).stats;
                    assert_eq!(g1.nv(), s.m + s.u1);
                    assert_eq!(g2.nv(), s.m + s.u2);
                    assert_eq!(g1.nv() + g2.nv(), s.v_delta + s.m_sm + 2 * s.m_pm);
                    assert_eq!(s.e_cap * 2 + s.e_delta, g1.ne() + g2.ne());
                });
            }
        }
    }

    #[test]
    fn perfect_matching_of_identical_templates() {
        let g = t(5, &[(0, 2), (2, 3), (3, 1), (2, 4)]);
        let mut perfect = 0;
        for_each_matching(&g, &g, |m| {
            if Overlay::new(&g, &g, m).stats.e_delta == 0 {
                perfect += 1;
            }
        });
        assert_eq!(perfect, g.aut_count());
    }

    #[test]
    fn mstar_membership() {
        let iso = t(4, &[(2, 3)]);
        let e = t(2, &[(0, 1)]);
        // the floating edge never meets a pruned anchor pair
        let m = Matching::new(&e, &iso, &[]).unwrap();
        assert!(!m.in_mstar(&e, &iso));
        let m = Matching::new(&iso, &iso, &[(2, 2)]).unwrap();
        assert!(m.in_mstar(&iso, &iso));
        let m = Matching::new(&iso, &iso, &[]).unwrap();
        assert!(!m.in_mstar(&iso, &iso));
        assert!(Matching::new(&iso, &iso, &[(2, 2), (3, 2)]).is_err());
        assert!(Matching::new(&iso, &iso, &[(0, 2)]).is_err());
    }

    #[test]
    fn edit_distances() {
        let e = t(2, &[(0, 1)]);
        let path = t(3, &[(0, 2), (2, 1)]);
        assert_eq!(edit_distance(&e, &path), 3);
        assert_eq!(edit_distance(&path, &path), 0);
        assert_eq!(edit_distance(&t(3, &[(0, 2)]), &t(3, &[(2, 0)])), 0);
        let ts = enumerate_templates(2).unwrap();
        for a in &ts {
            for b in &ts {
                assert_eq!(edit_distance(a, b) == 0, a == b);
                assert_eq!(edit_distance(a, b), edit_distance(b, a));
            }
        }
    }

    #[test]
    fn forest_rank_counts_merges() {
        assert_eq!(forest_rank([(0, 1), (1, 2), (0, 2)]), 2);
        assert_eq!(forest_rank([(0, 1), (3, 4)]), 2);
        assert_eq!(forest_rank(std::iter::empty()), 0);
    }
}
