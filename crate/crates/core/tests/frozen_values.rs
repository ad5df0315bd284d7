//! Reference values computed once with an exact rational solver written
//! independently of this crate, then frozen here.

use contagion::dynamics::{depth_excursion, run_replicas, Init, SurvivalStats};
use contagion::graphgen::{complete, gw_tree};
use contagion::oracle::{verify_recursion_tree, ChainSpec};
use contagion::{derive_stream, DegreeDistribution, HalfEdgeGraph, RootedTree, Rules, SimOptions, Variant};

// path ρ⁺ - ρ - v at λ = 1/10, E S from {ρ}
const PATH_ES: f64 = 121.0 / 115.0;
// K₂ from both infected at λ = 1
const K2_ET: f64 = 2.0;
// star with two leaves, root-suppressed chain, λ = 1/5
const STAR_MODIFIED: f64 = 36.0 / 25.0;
// binary tree of depth 2, root-suppressed chain, λ = 1/10
const BINARY_MODIFIED: f64 = 5534318449.0 / 4489000000.0;
// cherry below a super-root, root-added, λ = 1/10
const CHERRY_ES: f64 = 7393.0 / 6700.0;

fn path3() -> HalfEdgeGraph {
    HalfEdgeGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().with_root(0)
}

fn root_added(g: &HalfEdgeGraph, sr: usize, lambda: f64) -> ChainSpec {
    ChainSpec::from_variant(g, &Variant::RootAdded { super_root: sr }, lambda).unwrap()
}

fn suppressed(g: &HalfEdgeGraph, lambda: f64) -> ChainSpec {
    ChainSpec::from_variant(g, &Variant::RootSuppressed { super_root: 0, root: 1 }, lambda).unwrap()
}

fn mc_mean(g: &HalfEdgeGraph, rules: Rules, init: Vec<usize>, lambda: f64, reps: usize, seed: u64) -> SurvivalStats {
    let tr = run_replicas(g, &rules, &Init::Set(init), lambda, &SimOptions::horizon(1e6), reps, seed).unwrap();
    let t: Vec<Option<f64>> = tr.iter().map(|x| x.extinction_time).collect();
    SurvivalStats::from_times(&t, 1e6)
}

#[test]
fn path_return_time() {
    let g = path3();
    let c = root_added(&g, 0, 0.1);
    let es = c.hitting_time(c.state_of(&[1]), &[0]).unwrap();
    assert!((es - PATH_ES).abs() < 1e-12, "{es}");
}

#[test]
fn path_return_time_monte_carlo() {
    let g = path3();
    let rules = Variant::RootAdded { super_root: 0 }.rules(&g).unwrap();
    let s = mc_mean(&g, rules, vec![1], 0.1, 100_000, 11);
    let (m, se) = (s.mean.unwrap(), s.std_error.unwrap());
    assert!((m - PATH_ES).abs() < 4.0 * se, "{m} ± {se}");
}

#[test]
fn k2_extinction_time() {
    let g = complete(2);
    let c = ChainSpec::new(&g, Rules::default(), 1.0).unwrap();
    let et = c.hitting_time(c.state_of(&[0, 1]), &[0]).unwrap();
    assert!((et - K2_ET).abs() < 1e-12, "{et}");
    let s = mc_mean(&g, Rules::default(), vec![0, 1], 1.0, 100_000, 12);
    let (m, se) = (s.mean.unwrap(), s.std_error.unwrap());
    assert!((m - K2_ET).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn lone_vertex_mean_is_one() {
    let g = HalfEdgeGraph::from_edges(1, &[]).unwrap();
    let s = mc_mean(&g, Rules::default(), vec![0], 1.0, 100_000, 13);
    assert!((s.mean.unwrap() - 1.0).abs() < 0.02);
}

#[test]
fn star_modified_chain() {
    let g = HalfEdgeGraph::from_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap().with_root(0);
    let c = suppressed(&g, 0.2);
    let h = c.hitting_time(c.state_of(&[1]), &[0]).unwrap();
    assert!((h - STAR_MODIFIED).abs() < 1e-12, "{h}");
    assert!((h - 1.2f64.powi(2)).abs() < 1e-12);
}

#[test]
fn binary_modified_chain() {
    let edges = [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)];
    let g = HalfEdgeGraph::from_edges(8, &edges).unwrap().with_root(0);
    let c = suppressed(&g, 0.1);
    let h = c.hitting_time(c.state_of(&[1]), &[0]).unwrap();
    assert!((h - BINARY_MODIFIED).abs() < 1e-12, "{h}");

    let cherry = HalfEdgeGraph::from_edges(4, &[(0, 1), (1, 2), (1, 3)]).unwrap().with_root(0);
    let cc = root_added(&cherry, 0, 0.1);
    let es = cc.hitting_time(cc.state_of(&[1]), &[0]).unwrap();
    assert!((es - CHERRY_ES).abs() < 1e-12, "{es}");
    assert!((h - (1.0 + 0.1 * CHERRY_ES).powi(2)).abs() < 1e-12);

    let tree = RootedTree::from_parents(&[None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)]).unwrap();
    assert!(verify_recursion_tree(&tree, 0.1).unwrap().pass);
}

#[test]
fn unary_depth_tail() {
    let lambda = 0.01;
    let tree = RootedTree::from_parents(&[None, Some(0), Some(1)]).unwrap().with_super_root(1);
    let reps = 200_000;
    let dt = depth_excursion(&tree, lambda, reps, 14, 1).unwrap();
    let p = lambda / (1.0 + lambda);
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    let got = dt.prob_at_least(2);
    assert!((got - p).abs() < 3.0 * se, "{got} vs {p}");

    let zero = depth_excursion(&tree, 0.0, 1000, 15, 1).unwrap();
    assert_eq!(zero.prob_at_least(1), 1.0);
    assert_eq!(zero.prob_at_least(2), 0.0);
}

#[test]
fn gw_survival_acceptance_rate() {
    let mu = DegreeDistribution::poisson(2.0).unwrap();
    // extinction by generation t: q₁ = e^{-2}, q_{t+1} = e^{2(q_t - 1)}
    let mut q = 0.0f64;
    for _ in 0..5 {
        q = (2.0 * (q - 1.0)).exp();
    }
    let n = 20_000;
    let mut rng = derive_stream(16, "gw-accept", 0);
    let hits = (0..n).filter(|_| gw_tree(&mu, &mu, 5, &mut rng).unwrap().height() == 5).count();
    let p = 1.0 - q;
    let se = (p * q / n as f64).sqrt();
    let got = hits as f64 / n as f64;
    assert!((got - p).abs() < 3.0 * se, "{got} vs {p}");
}

#[test]
fn gw_generation_sizes() {
    let mu = DegreeDistribution::poisson(2.0).unwrap();
    let n = 10_000;
    let mut sums = [0.0f64; 6];
    let mut sq = [0.0f64; 6];
    let mut rng = derive_stream(17, "gw-gen", 0);
    for _ in 0..n {
        let t = gw_tree(&mu, &mu, 5, &mut rng).unwrap();
        let mut z = [0usize; 6];
        for &d in t.graph.depth().unwrap() {
            z[d] += 1;
        }
        for s in 0..6 {
            sums[s] += z[s] as f64;
            sq[s] += (z[s] * z[s]) as f64;
        }
    }
    for s in 0..6 {
        let m = sums[s] / n as f64;
        let var = sq[s] / n as f64 - m * m;
        let se = (var / n as f64).sqrt().max(1e-12);
        let expect = 2f64.powi(s as i32);
        assert!((m - expect).abs() < 3.0 * se + 1e-12, "generation {s}: {m} vs {expect}");
    }
}
