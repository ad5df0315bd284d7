use contagion::expander::{peel_core_with_order, reach_count, truncate_degrees};
use contagion::experiments::coupling_laws;
use contagion::graphgen::{configuration_model, cutoff_line_match};
use contagion::oracle::{verify_recursion_tree, ChainSpec};
use contagion::rng::derive_key;
use contagion::{derive_stream, DegreeDistribution, HalfEdgeGraph, RootedTree, Variant};
use proptest::prelude::*;

fn parents() -> impl Strategy<Value = Vec<Option<usize>>> {
    (2usize..=7).prop_flat_map(|n| {
        (1..n).map(|i| (0..i).prop_map(Some).boxed()).collect::<Vec<_>>().prop_map(|ps| {
            let mut v = vec![None];
            v.extend(ps);
            v
        })
    })
}

fn small_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=20).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..40)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn stationary_law_is_a_distribution(ps in parents(), lambda in 0.05f64..2.0) {
        let t = RootedTree::from_parents(&ps).unwrap().with_super_root(1);
        let sr = t.super_root.unwrap();
        let c = ChainSpec::from_variant(&t.graph, &Variant::RootAdded { super_root: sr }, lambda).unwrap();
        let st = c.stationary().unwrap();
        let total: f64 = st.pi.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(st.pi.iter().all(|&p| p >= -1e-15));
    }

    #[test]
    fn recursion_on_random_trees(ps in parents(), lambda in 0.05f64..1.0) {
        let t = RootedTree::from_parents(&ps).unwrap();
        prop_assert!(verify_recursion_tree(&t, lambda).unwrap().pass);
    }

    #[test]
    fn peel_is_order_independent((n, edges) in small_graph(), s in 1usize..4, k1 in any::<u64>(), k2 in any::<u64>()) {
        let order = |k: u64| {
            let mut o: Vec<usize> = (0..n).collect();
            contagion::rng::shuffle(&mut o, &mut derive_stream(k, "order", 0));
            o
        };
        prop_assert_eq!(peel_core_with_order(n, &edges, s, &order(k1)), peel_core_with_order(n, &edges, s, &order(k2)));
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), idx in any::<u64>()) {
        let draw = || {
            let mut s = derive_stream(seed, "p", idx);
            (0..8).map(|_| s.uniform().to_bits()).collect::<Vec<u64>>()
        };
        let (a, b) = (draw(), draw());
        prop_assert_eq!(a, b);
        prop_assert_eq!(derive_key(seed, "p", idx), derive_key(seed, "p", idx));
    }

    #[test]
    fn cutoff_gives_perfect_matching(degs in prop::collection::vec(0usize..5, 1..12), seed in any::<u64>(), pick in 0usize..3) {
        let mut degs = degs;
        if degs.iter().sum::<usize>() % 2 == 1 {
            degs[0] += 1;
        }
        let r = cutoff_line_match(&degs, |u| {
            let free: Vec<usize> = u.iter().collect();
            free[pick.min(free.len() - 1)]
        }, &mut derive_stream(seed, "cut", 0)).unwrap();
        let m = r.graph.matching();
        prop_assert!(m.iter().enumerate().all(|(h, &x)| x != h && m[x] == h));
        prop_assert_eq!(r.graph.degrees(), degs);
    }

    #[test]
    fn configuration_model_keeps_half_edges(n in 2usize..200, seed in any::<u64>()) {
        let mu = DegreeDistribution::poisson(2.5).unwrap();
        let g = configuration_model(n, &mu, &mut derive_stream(seed, "cm", 0)).unwrap();
        prop_assert!(g.check().is_ok());
        prop_assert_eq!(g.degrees().iter().sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn truncation_caps_degrees(n in 2usize..300, j in 1usize..6, seed in any::<u64>()) {
        let mu = DegreeDistribution::poisson(4.0).unwrap();
        let g = configuration_model(n, &mu, &mut derive_stream(seed, "tr", 0)).unwrap();
        if let Ok(t) = truncate_degrees(&g, j) {
            prop_assert!(t.graph.max_degree() <= 2 * j);
            prop_assert_eq!(t.old_ids.len(), t.graph.n());
        }
    }

    #[test]
    fn reach_covers_the_set((n, edges) in small_graph(), r in 0usize..3, mask in any::<u32>()) {
        let g = HalfEdgeGraph::from_edges(n, &edges).unwrap();
        let w0: Vec<usize> = (0..n).filter(|v| v % 2 == 0).collect();
        let a: Vec<usize> = w0.iter().copied().filter(|v| mask >> (v % 32) & 1 == 1).collect();
        let c = reach_count(&g, &w0, &a, r);
        prop_assert!(c >= a.len() && c <= w0.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn coupling_is_monotone(seed in any::<u64>()) {
        let s = coupling_laws(10, 8, 5.0, seed).unwrap();
        prop_assert_eq!(s.violations(), 0);
    }
}
