use contagion::expander::peel_core_cutoff;
use contagion::graphgen::{configuration_model, cutoff_line_match, erdos_renyi, neighborhood, shuffle_pairing};
use contagion::{derive_stream, DegreeDistribution};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
use std::collections::HashMap;

fn chi2_p(obs: &[f64], exp: &[f64]) -> f64 {
    let stat: f64 = obs.iter().zip(exp).map(|(o, e)| (o - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((obs.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn configuration_degrees_follow_poisson() {
    let mu = DegreeDistribution::poisson(3.0).unwrap();
    let n = 10_000;
    let g = configuration_model(n, &mu, &mut derive_stream(21, "deg", 0)).unwrap();
    let top = 9;
    let mut obs = vec![0.0; top + 1];
    for d in g.degrees() {
        obs[d.min(top)] += 1.0;
    }
    let mut exp: Vec<f64> = (0..top).map(|k| mu.p(k) * n as f64).collect();
    exp.push(mu.tail(top) * n as f64);
    let p = chi2_p(&obs, &exp);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn uniform_stream() {
    let n = 1_000_000;
    let mut rng = derive_stream(22, "unif", 0);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    let bins = 100;
    let mut obs = vec![0.0; bins];
    for &x in &xs {
        obs[(x * bins as f64) as usize] += 1.0;
    }
    let p = chi2_p(&obs, &vec![n as f64 / bins as f64; bins]);
    assert!(p > 1e-3, "chi-square p = {p}");
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - x))
        .fold(0.0, f64::max);
    // Kolmogorov critical value at level 0.001
    assert!(d * (n as f64).sqrt() < 1.9495, "KS D = {d}");
}

#[test]
fn poisson_sample_mean() {
    let mu = DegreeDistribution::poisson(2.0).unwrap();
    let n = 100_000;
    let xs = mu.sample(n, &mut derive_stream(23, "pois", 0));
    let m = xs.iter().sum::<usize>() as f64 / n as f64;
    assert!((m - 2.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "{m}");
}

#[test]
fn erdos_renyi_edge_count() {
    let n = 1000;
    let d = 3.0;
    let g = erdos_renyi(n, d, &mut derive_stream(24, "er", 0)).unwrap();
    let pairs = (n * (n - 1) / 2) as f64;
    let p = d / n as f64;
    let (m, sd) = (pairs * p, (pairs * p * (1.0 - p)).sqrt());
    assert!((g.edge_count() as f64 - m).abs() < 3.0 * sd, "{} vs {m}", g.edge_count());
}

fn matching_tv(counts: &HashMap<Vec<usize>, usize>, runs: usize, support: usize) -> f64 {
    let u = 1.0 / support as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 / runs as f64 - u).abs()).sum();
    (seen + (support - counts.len()) as f64 * u) / 2.0
}

#[test]
fn cutoff_and_shuffle_match_uniform_law() {
    // six half-edges have 15 perfect matchings, each equally likely
    let degs = [2, 2, 2];
    let runs = 10_000;
    let mut cut = HashMap::new();
    let mut shuf = HashMap::new();
    let mut rng = derive_stream(25, "tv", 0);
    for _ in 0..runs {
        let r = cutoff_line_match(&degs, |u| u.lowest().unwrap(), &mut rng).unwrap();
        *cut.entry(r.graph.matching().to_vec()).or_insert(0) += 1;
        let g = shuffle_pairing(&degs, &mut rng).unwrap();
        *shuf.entry(g.matching().to_vec()).or_insert(0) += 1;
    }
    assert_eq!(cut.len(), 15);
    assert_eq!(shuf.len(), 15);
    let (a, b) = (matching_tv(&cut, runs, 15), matching_tv(&shuf, runs, 15));
    assert!(a <= 0.02 && b <= 0.02, "TV cutoff {a}, shuffle {b}");
}

#[test]
fn cutoff_peel_keeps_binomial_core() {
    let (m, theta) = (1000u64, 0.1);
    let b = Binomial::new(theta, m).unwrap();
    let pairs: Vec<(usize, f64)> = (0..=m).map(|k| (k as usize, b.pmf(k))).filter(|p| p.1 > 0.0).collect();
    let law = DegreeDistribution::table(&pairs).unwrap();
    let n = 1000;
    let mut rng = derive_stream(26, "peel", 0);
    let mut degs = law.sample(n, &mut rng);
    if degs.iter().sum::<usize>() % 2 == 1 {
        degs[0] += 1;
    }
    let s = (theta * m as f64 / 20.0).ceil() as usize;
    let r = peel_core_cutoff(&degs, s, &mut rng).unwrap();
    assert!(r.survivors.len() * 2 >= n, "{} survivors", r.survivors.len());
}

#[test]
fn few_balls_carry_two_cycles() {
    let mu = DegreeDistribution::poisson(3.0).unwrap();
    let gamma = 0.3;
    let frac: Vec<f64> = [1000usize, 10_000]
        .iter()
        .map(|&n| {
            let g = configuration_model(n, &mu, &mut derive_stream(27, "excess", n as u64)).unwrap();
            let r = (gamma * (n as f64).ln()).floor() as usize;
            (0..n).filter(|&v| neighborhood(&g, v, r).tree_excess >= 2).count() as f64 / n as f64
        })
        .collect();
    assert!(frac[0] < 0.1 && frac[1] < frac[0], "{frac:?}");
}
