//! Anchored templates: small graphs with distinguished nodes v1 = 0 and v2 = 1.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count a template may have (2 anchors + 2 nodes per edge at D = 4).
pub const MAX_NODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Template {
    nv: usize,
    edges: Vec<(u8, u8)>,
}

fn pair_index(nv: usize, a: usize, b: usize) -> usize {
    // row-major position of (a, b), a < b, among the pairs of nv nodes
    a * nv - a * (a + 1) / 2 + (b - a - 1)
}

impl Template {
    /// Validates and canonicalizes. Edges are unordered pairs over 0..nv.
    pub fn new(nv: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if !(2..=MAX_NODES).contains(&nv) {
            return Err(Error::Param(format!("template node count must lie in 2..={MAX_NODES}, got {nv}")));
        }
        if edges.is_empty() {
            return Err(Error::Param("template needs at least one edge".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b || a >= nv || b >= nv {
                return Err(Error::Param(format!("bad template edge ({a},{b})")));
            }
            if !set.insert((a.min(b) as u8, a.max(b) as u8)) {
                return Err(Error::Param(format!("duplicate template edge ({a},{b})")));
            }
        }
        let t = Template { nv, edges: set.into_iter().collect() };
        for v in 2..nv {
            if t.degree(v) == 0 {
                return Err(Error::Param(format!("non-anchor node {v} is isolated")));
            }
        }
        Ok(t.canonical().0)
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn ne(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(a, b)| (a as usize, b as usize))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a as usize == v || b as usize == v).count()
    }

    pub fn adjacency(&self) -> [u16; MAX_NODES] {
        let mut adj = [0u16; MAX_NODES];
        for (a, b) in self.edges() {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        adj
    }

    pub fn anchor_isolated(&self, anchor: usize) -> bool {
        self.degree(anchor) == 0
    }

    /// Nodes incident to at least one edge.
    pub fn pruned_nodes(&self) -> usize {
        (0..self.nv).filter(|&v| self.degree(v) > 0).count()
    }

    /// Node sets of the connected components that carry edges (isolated anchors excluded).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let adj = self.adjacency();
        let mut seen = 0u16;
        let mut out = Vec::new();
        for s in 0..self.nv {
            if seen >> s & 1 == 1 || adj[s] == 0 {
                continue;
            }
            let mut comp = 1u16 << s;
            let mut frontier = comp;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let new = adj[v] & !comp;
                comp |= new;
                frontier |= new;
            }
            seen |= comp;
            out.push((0..self.nv).filter(|&v| comp >> v & 1 == 1).collect());
        }
        out
    }

    /// Connected with both anchors inside, i.e. a single component covering every node.
    pub fn is_connected(&self) -> bool {
        let c = self.components();
        c.len() == 1 && c[0].len() == self.nv
    }

    /// |E| / (|V| − 1).
    pub fn density(&self) -> f64 {
        self.ne() as f64 / (self.nv as f64 - 1.0)
    }

    fn code_under(&self, map: &[usize]) -> u64 {
        let p = self.nv * (self.nv - 1) / 2;
        let mut code = 0u64;
        for (a, b) in self.edges() {
            let (x, y) = (map[a].min(map[b]), map[a].max(map[b]));
            code |= 1 << (p - 1 - pair_index(self.nv, x, y));
        }
        code
    }

    fn relabel(&self, map: &[usize]) -> Template {
        let mut edges: Vec<(u8, u8)> = self
            .edges()
            .map(|(a, b)| (map[a].min(map[b]) as u8, map[a].max(map[b]) as u8))
            .collect();
        edges.sort_unstable();
        Template { nv: self.nv, edges }
    }

    /// Color refinement with the anchors pinned; returns an isomorphism-invariant color per node.
    fn refined_colors(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut color: Vec<usize> = (0..self.nv).map(|v| v.min(2)).collect();
        let mut classes = 0;
        loop {
            let sigs: Vec<(usize, Vec<usize>)> = (0..self.nv)
                .map(|v| {
                    let mut nb: Vec<usize> = (0..self.nv).filter(|&u| adj[v] >> u & 1 == 1).map(|u| color[u]).collect();
                    nb.sort_unstable();
                    (color[v], nb)
                })
                .collect();
            let mut uniq = sigs.clone();
            uniq.sort();
            uniq.dedup();
            color = sigs.iter().map(|s| uniq.binary_search(s).unwrap()).collect();
            if uniq.len() == classes {
                return color;
            }
            classes = uniq.len();
        }
    }

    /// Minimal-code relabeling over orderings of non-anchors, and the number of
    /// anchor-fixing automorphisms.
    fn canonical(&self) -> (Template, usize) {
        let color = self.refined_colors();
        // target position of each cell: non-anchors sorted by color
        let mut order: Vec<usize> = (2..self.nv).collect();
        order.sort_by_key(|&v| (color[v], v));
        let slot_color: Vec<usize> = order.iter().map(|&v| color[v]).collect();
        let mut map = vec![usize::MAX; self.nv];
        map[0] = 0;
        map[1] = 1;
        let mut best = (u64::MAX, 0usize, Vec::new());
        let mut used = vec![false; self.nv];
        self.search(&color, &slot_color, 0, &mut map, &mut used, &mut best);
        let (_, hits, best_map) = best;
        (self.relabel(&best_map), hits)
    }

    fn search(
        &self,
        color: &[usize],
        slot_color: &[usize],
        slot: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        best: &mut (u64, usize, Vec<usize>),
    ) {
        if slot == slot_color.len() {
            let code = self.code_under(map);
            if code < best.0 {
                *best = (code, 1, map.clone());
            } else if code == best.0 {
                best.1 += 1;
            }
            return;
        }
        for v in 2..self.nv {
            if !used[v] && color[v] == slot_color[slot] {
                used[v] = true;
                map[v] = slot + 2;
                self.search(color, slot_color, slot + 1, map, used, best);
                used[v] = false;
            }
        }
    }

    /// |Aut(G)| over permutations fixing v1 and v2.
    pub fn aut_count(&self) -> usize {
        self.canonical().1
    }

    /// Compact canonical key, e.g. `3:02.12` for the path v1 − v3 − v2 (0-based labels).
    pub fn encoding(&self) -> String {
        let e: Vec<String> = self.edges.iter().map(|&(a, b)| format!("{a}{b}")).collect();
        format!("{}:{}", self.nv, e.join("."))
    }

    pub fn from_encoding(s: &str) -> Result<Self> {
        let bad = || Error::Param(format!("bad template encoding `{s}`"));
        let (nv, rest) = s.split_once(':').ok_or_else(bad)?;
        let nv: usize = nv.parse().map_err(|_| bad())?;
        let mut edges = Vec::new();
        for tok in rest.split('.') {
            let d: Vec<usize> = tok.chars().map(|c| c.to_digit(10).map(|x| x as usize)).collect::<Option<_>>().ok_or_else(bad)?;
            if d.len() != 2 {
                return Err(bad());
            }
            edges.push((d[0], d[1]));
        }
        Template::new(nv, &edges)
    }

    /// The clique on m nodes minus the anchor edge.
    pub fn clique_minus_edge(m: usize) -> Result<Self> {
        let t = crate::clique::clique_template(m)?;
        Template::new(m, &t.edges)
    }
}

/// One representative per class of templates with 1 ≤ |E| ≤ D, D ≤ 4.
pub fn enumerate_templates(d: usize) -> Result<Vec<Template>> {
    if d > 4 {
        return Err(Error::Budget(format!("template enumeration is limited to D <= 4, got {d}")));
    }
    let mut all: BTreeSet<Template> = BTreeSet::new();
    let mut layer: BTreeSet<Template> = BTreeSet::new();
    for &(nv, e) in &[(2, (0, 1)), (3, (0, 2)), (3, (1, 2)), (4, (2, 3))] {
        if d >= 1 {
            layer.insert(Template::new(nv, &[e])?);
        }
    }
    for _ in 1..d.max(1) {
        all.extend(layer.iter().cloned());
        let mut next = BTreeSet::new();
        for t in &layer {
            let nv = t.nv;
            let adj = t.adjacency();
            let base: Vec<(usize, usize)> = t.edges().collect();
            let mut candidates = Vec::new();
            for a in 0..nv {
                for b in a + 1..nv {
                    if adj[a] >> b & 1 == 0 {
                        candidates.push((nv, (a, b)));
                    }
                }
                if nv < MAX_NODES {
                    candidates.push((nv + 1, (a, nv)));
                }
            }
            if nv + 2 <= MAX_NODES {
                candidates.push((nv + 2, (nv, nv + 1)));
            }
            for (nnv, e) in candidates {
                let mut edges = base.clone();
                edges.push(e);
                next.insert(Template::new(nnv, &edges)?);
            }
        }
        layer = next;
    }
    if d >= 1 {
        all.extend(layer);
    }
    let mut out: Vec<Template> = all.into_iter().collect();
    out.sort_by(|a, b| (a.ne(), a.nv, &a.edges).cmp(&(b.ne(), b.nv, &b.edges)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_edge_classes() {
        let t = enumerate_templates(1).unwrap();
        let enc: Vec<String> = t.iter().map(Template::encoding).collect();
        assert_eq!(enc, vec!["2:01", "3:02", "3:12", "4:23"]);
    }

    #[test]
    fn two_edge_classes_contain_path_and_matching() {
        let t = enumerate_templates(2).unwrap();
        let path = Template::new(3, &[(0, 2), (2, 1)]).unwrap();
        let two = Template::new(4, &[(0, 2), (1, 3)]).unwrap();
        assert!(t.contains(&path) && t.contains(&two));
        for g in &t {
            assert!((1..=2).contains(&g.ne()));
            assert!((2..g.nv()).all(|v| g.degree(v) > 0));
            assert_eq!(&Template::new(g.nv(), &g.edges().collect::<Vec<_>>()).unwrap(), g);
        }
    }

    #[test]
    fn relabeling_is_canonicalized() {
        let a = Template::new(4, &[(0, 2), (2, 3)]).unwrap();
        let b = Template::new(4, &[(0, 3), (3, 2)]).unwrap();
        assert_eq!(a, b);
        assert_eq!(Template::from_encoding(&a.encoding()).unwrap(), a);
        // anchors are not interchangeable
        assert_ne!(Template::new(3, &[(0, 2)]).unwrap(), Template::new(3, &[(1, 2)]).unwrap());
    }

    #[test]
    fn automorphisms() {
        assert_eq!(Template::new(4, &[(2, 3)]).unwrap().aut_count(), 2);
        assert_eq!(Template::new(4, &[(0, 2), (0, 3)]).unwrap().aut_count(), 2);
        assert_eq!(Template::new(6, &[(2, 3), (4, 5)]).unwrap().aut_count(), 8);
        assert_eq!(Template::clique_minus_edge(4).unwrap().aut_count(), 2);
        assert_eq!(Template::new(3, &[(0, 2), (1, 2)]).unwrap().aut_count(), 1);
    }

    #[test]
    fn structure_queries() {
        let t = Template::new(4, &[(0, 2), (1, 3)]).unwrap();
        assert_eq!(t.components().len(), 2);
        assert!(!t.is_connected());
        let iso = Template::new(4, &[(2, 3)]).unwrap();
        assert!(iso.anchor_isolated(0) && iso.anchor_isolated(1));
        assert_eq!(iso.pruned_nodes(), 2);
        assert!(Template::new(3, &[(0, 1)]).is_err());
        assert!(Template::new(3, &[]).is_err());
        assert!(Template::clique_minus_edge(3).unwrap().is_connected());
    }

    /// Isomorphism classes by brute force over all labeled graphs on up to 2 + 2D nodes.
    fn brute_classes(d: usize) -> usize {
        let mut set = BTreeSet::new();
        for nv in 2..=2 + 2 * d {
            let pairs: Vec<(usize, usize)> = (0..nv).flat_map(|a| (a + 1..nv).map(move |b| (a, b))).collect();
            let mut pick = Vec::new();
            fn rec(pairs: &[(usize, usize)], start: usize, left: usize, nv: usize, pick: &mut Vec<(usize, usize)>, set: &mut BTreeSet<Template>) {
                if !pick.is_empty() {
                    if let Ok(t) = Template::new(nv, pick) {
                        set.insert(t);
                    }
                }
                if left == 0 {
                    return;
                }
                for i in start..pairs.len() {
                    pick.push(pairs[i]);
                    rec(pairs, i + 1, left - 1, nv, pick, set);
                    pick.pop();
                }
            }
            rec(&pairs, 0, d, nv, &mut pick, &mut set);
        }
        set.len()
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for d in 1..=3 {
            assert_eq!(enumerate_templates(d).unwrap().len(), brute_classes(d), "D={d}");
        }
    }
}
