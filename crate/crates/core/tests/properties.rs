use proptest::prelude::*;
use sbmclique::ld::{for_each_matching, Overlay};
use sbmclique::mom::{clustering_error, Partition};
use sbmclique::sbm::{membership_target, sample_sbm};
use sbmclique::{center_adjacency, clique_stat, Conditioning, Graph, SbmParams, Template};

fn params() -> impl Strategy<Value = (usize, usize, f64, f64)> {
    (6usize..40, 2usize..6, 0.05f64..0.5, 0.0f64..0.5)
        .prop_filter("valid", |&(n, k, q, l)| k <= n && q + l <= 1.0)
}

fn random_graph(n: usize, bits: &[bool]) -> Graph {
    let mut edges = Vec::new();
    let mut it = bits.iter().cycle();
    for a in 0..n {
        for b in a + 1..n {
            if *it.next().unwrap() {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_graphs_are_symmetric_and_reproducible((n, k, q, l) in params(), seed in any::<u64>(), c in 0usize..3) {
        let cond = [Conditioning::Same, Conditioning::Diff, Conditioning::None][c];
        let p = SbmParams::new(n, k, q, l).unwrap();
        let (z, g) = sample_sbm(&p, seed, cond);
        prop_assert!(g.is_symmetric());
        prop_assert!((0..n).all(|i| !g.has_edge(i, i)));
        let (z2, g2) = sample_sbm(&p, seed, cond);
        prop_assert_eq!(z.z.clone(), z2.z);
        prop_assert_eq!(g.edges(), g2.edges());
        match cond {
            Conditioning::Same => prop_assert_eq!(z.z[0], z.z[1]),
            Conditioning::Diff => prop_assert_ne!(z.z[0], z.z[1]),
            Conditioning::None => {}
        }
    }

    #[test]
    fn membership_rows_sum_to_partner_count((n, k, q, l) in params(), seed in any::<u64>()) {
        let p = SbmParams::new(n, k, q, l).unwrap();
        let (z, _) = sample_sbm(&p, seed, Conditioning::None);
        let x = membership_target(&z, k);
        for i in 0..n {
            let partners = (0..n).filter(|&j| j != i && z.z[j] == z.z[i]).count() as f64;
            let row: f64 = (0..n).filter(|&j| j != i).map(|j| x[i][j]).sum();
            prop_assert!((row - (partners - (n - 1) as f64 / k as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn clique_stat_is_symmetric_in_anchors(n in 5usize..14, bits in prop::collection::vec(any::<bool>(), 1..97), q in 0.05f64..0.6, m in 3usize..5) {
        let g = random_graph(n, &bits);
        let y = center_adjacency(&g, q);
        let a = clique_stat(&y, 0, 1, m, None).unwrap();
        let b = clique_stat(&y, 1, 0, m, None).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn triangle_statistic_is_pooled_inner_product(n in 3usize..70, bits in prop::collection::vec(any::<bool>(), 1..300), q in 0.0f64..1.0, i in 0usize..70, j in 0usize..70) {
        let (i, j) = (i % n, j % n);
        prop_assume!(i != j);
        let g = random_graph(n, &bits);
        let y = center_adjacency(&g, q);
        let inner: f64 = (0..n).filter(|&k| k != i && k != j).map(|k| y.entry(i, k) * y.entry(j, k)).sum();
        let pool: Vec<usize> = (0..n).filter(|&k| k != i && k != j).collect();
        prop_assert!((clique_stat(&y, i, j, 3, None).unwrap() - inner).abs() < 1e-9);
        prop_assert!((clique_stat(&y, i, j, 3, Some(&pool)).unwrap() - inner).abs() < 1e-9);
    }

    #[test]
    fn error_is_a_fraction(labels_a in prop::collection::vec(0usize..4, 1..40), shift in 0usize..7) {
        let n = labels_a.len();
        let labels_b: Vec<usize> = labels_a.iter().enumerate().map(|(i, &c)| if i % 7 == shift { (c + 1) % 4 } else { c }).collect();
        let part = |lab: &[usize]| {
            let mut cls = vec![Vec::new(); 4];
            for (u, &c) in lab.iter().enumerate() { cls[c].push(u); }
            cls.retain(|c| !c.is_empty());
            Partition::new(cls).unwrap()
        };
        let e = clustering_error(&part(&labels_a), &part(&labels_b)).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(clustering_error(&part(&labels_a), &part(&labels_a)).unwrap(), 0.0);
        prop_assert!(e <= (n as f64 / 7.0).ceil() / n as f64 + 1e-12);
    }

    #[test]
    fn canonical_form_is_relabeling_invariant(
        edges in prop::collection::btree_set((0usize..7, 0usize..7), 1..5),
        perm in Just((2usize..7).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        let used: std::collections::BTreeSet<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).filter(|&v| v >= 2).collect();
        prop_assume!(!edges.is_empty());
        // compact non-anchor labels so that every non-anchor has an edge
        let mut relabel = [0usize, 1, 0, 0, 0, 0, 0];
        for (i, v) in used.iter().enumerate() { relabel[*v] = i + 2; }
        let nv = 2 + used.len();
        let e1: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (relabel[a], relabel[b])).collect();
        let sigma: Vec<usize> = [0, 1].into_iter().chain(perm.iter().copied().filter(|&v| v < nv)).collect();
        let e2: Vec<(usize, usize)> = e1.iter().map(|&(a, b)| (sigma[a], sigma[b])).collect();
        let t1 = Template::new(nv, &e1).unwrap();
        let t2 = Template::new(nv, &e2).unwrap();
        prop_assert_eq!(&t1, &t2);
        prop_assert_eq!(Template::from_encoding(&t1.encoding()).unwrap(), t1.clone());
        let mut count = 0;
        for_each_matching(&t1, &t2, |m| {
            let s = Overlay::new(&t1, &t2, m).stats;
            assert_eq!(2 * nv, s.v_delta + s.m_sm + 2 * s.m_pm);
            if s.e_delta == 0 { count += 1; }
        });
        prop_assert_eq!(count, t1.aut_count());
    }
}
