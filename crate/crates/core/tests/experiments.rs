use contagion::expander::{
    choose_parameters, run_pipeline, truncate_degrees, verify_expander, Constants, MuStats, Outcome, PipelineConfig, VerifyMode,
};
use contagion::experiments::{expander_growth, lambda_monotonicity, path_relay_grid, single_vertex_start, star_sweep};
use contagion::graphgen::configuration_model;
use contagion::{derive_stream, DegreeDistribution, Error, HalfEdgeGraph};

fn desk() -> PipelineConfig {
    PipelineConfig { j: 12, radius: 1, m: 6, alpha: 0.05, verify: VerifyMode::Sampled(10_000), ..PipelineConfig::default() }
}

fn pois3(n: usize, idx: u64) -> HalfEdgeGraph {
    configuration_model(n, &DegreeDistribution::poisson(3.0).unwrap(), &mut derive_stream(1, "g", idx)).unwrap()
}

#[test]
fn star_survival_grows_with_degree() {
    let s = star_sweep(&[4, 8, 16], 1.0, 200, 1e3, 31).unwrap();
    assert!(s.slope.unwrap() > 0.0);
    let meds: Vec<f64> = s.rows.iter().map(|r| r.1.median.unwrap()).collect();
    assert!(meds.windows(2).all(|w| w[0] < w[1]), "{meds:?}");
}

#[test]
fn star_without_infection_is_a_maximum() {
    // with λ = 0 the extinction time is the largest of d+1 unit exponentials
    for d in [4usize, 16] {
        let s = star_sweep(&[d], 0.0, 4000, 1e3, 32).unwrap();
        let med = s.rows[0].1.median.unwrap();
        let exact = -(1.0 - 0.5f64.powf(1.0 / (d as f64 + 1.0))).ln();
        assert!((med - exact).abs() < 0.1, "d={d}: {med} vs {exact}");
    }
}

#[test]
fn relay_grid_finds_every_short_path() {
    let pts = path_relay_grid(5, 400, 33).unwrap();
    assert!(pts.iter().all(|p| p.found.is_some()), "{pts:?}");
}

#[test]
fn growth_failures() {
    let mu = DegreeDistribution::poisson(3.0).unwrap();
    let g = pois3(2000, 0);
    let rep = run_pipeline(&g, &mu, &desk()).unwrap();
    let w0 = &rep.certificate.w0;
    let rows = expander_growth(&g, w0, 0.05, 0.0, 1.0, &[1, 5], 200, 34).unwrap();
    assert!(rows.iter().all(|r| r.failure_frequency == 1.0));
    let rows = expander_growth(&g, w0, 0.05, 2.0, 1.0, &[1, 5, 50], 200, 34).unwrap();
    assert!(rows[2].skipped);
    assert!(rows[1].failure_frequency < rows[0].failure_frequency, "{rows:?}");
}

#[test]
fn single_start_survives() {
    let mu = DegreeDistribution::poisson(3.0).unwrap();
    let g = pois3(1000, 1);
    let rep = run_pipeline(&g, &mu, &desk()).unwrap();
    let s = single_vertex_start(&g, &rep.certificate.w0, 2.0, 10.0, 600, 35).unwrap();
    assert!(s.overall.fraction > 0.0);
    assert!(s.in_w0.fraction > s.outside_w0.fraction, "{s:?}");
    assert_eq!(s.isolated.survived, 0);

    // an isolated start lives to time h with probability e^{-h}
    let empty = HalfEdgeGraph::from_edges(50, &[]).unwrap();
    let s = single_vertex_start(&empty, &[], 2.0, 1.0, 4000, 36).unwrap();
    let p = (-1.0f64).exp();
    assert!((s.isolated.fraction - p).abs() < 3.0 * (p * (1.0 - p) / 4000.0).sqrt(), "{}", s.isolated.fraction);

    let s = single_vertex_start(&g, &[], 0.0, 50.0, 500, 37).unwrap();
    assert_eq!(s.overall.survived, 0);
}

#[test]
fn coupled_lambdas_are_ordered() {
    let g = pois3(200, 2);
    let init: Vec<usize> = (0..200).collect();
    assert_eq!(lambda_monotonicity(&g, 0.5, 1.0, &init, 20.0, 1000, 38).unwrap(), 0);
}

#[test]
fn subcritical_pipeline_reports_cleanly() {
    let mu = DegreeDistribution::poisson(0.5).unwrap();
    let g = configuration_model(2000, &mu, &mut derive_stream(1, "sub", 0)).unwrap();
    match run_pipeline(&g, &mu, &PipelineConfig { auto_params: true, ..desk() }) {
        Err(Error::Subcritical(_)) | Err(Error::InvalidParameter(_)) | Err(Error::EmptyTruncation) => {}
        other => panic!("{other:?}"),
    }
    let rep = run_pipeline(&g, &mu, &desk()).unwrap();
    assert_eq!(rep.certificate.outcome, Outcome::RefutedEmpty);
}

#[test]
fn pipeline_is_reproducible() {
    let mut edges = Vec::new();
    for base in [0usize, 10] {
        for a in 0..8 {
            for b in a + 1..8 {
                edges.push((base + a, base + b));
            }
        }
    }
    edges.extend([(7, 8), (8, 9), (9, 10)]);
    let g = HalfEdgeGraph::from_edges(18, &edges).unwrap();
    let mu = DegreeDistribution::poisson(6.0).unwrap();
    let cfg = PipelineConfig { j: 6, radius: 1, m: 1, alpha: 0.5, verify: VerifyMode::Exhaustive, ..PipelineConfig::default() };
    let a = serde_json::to_string(&run_pipeline(&g, &mu, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_pipeline(&g, &mu, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn exhaustive_check_is_reproducible() {
    let g = configuration_model(20, &DegreeDistribution::point(3), &mut derive_stream(39, "cubic", 0)).unwrap();
    let w0: Vec<usize> = (0..20).collect();
    let a = verify_expander(&g, &w0, 0.15, 2, VerifyMode::Exhaustive, 1_000_000, 0).unwrap();
    let b = verify_expander(&g, &w0, 0.15, 2, VerifyMode::Exhaustive, 1_000_000, 0).unwrap();
    assert!(a.proof);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.recheck(&g));
}

#[test]
fn smaller_thinning_needs_larger_radius() {
    let c = Constants::default();
    let r1 = |u: f64| choose_parameters(&MuStats { b_bar: 2.0, d: 3.0, u_j: u }, 16, &c).unwrap().solved.unwrap().r1_exact;
    assert!(r1(1e-4) > r1(1e-3));
    assert!(matches!(choose_parameters(&MuStats { b_bar: 0.9, d: 3.0, u_j: 1e-3 }, 16, &c), Err(Error::Subcritical(_))));
}

#[test]
fn truncation_and_exploration_on_large_graph() {
    let mu = DegreeDistribution::poisson(3.0).unwrap();
    let n = 10_000;
    let g = pois3(n, 3);
    let t = truncate_degrees(&g, 8).unwrap();
    let tot = t.report.total_degree as f64;
    assert!(tot > 1.5 * n as f64 && tot < 4.5 * n as f64, "{tot}");
    let rep = run_pipeline(&g, &mu, &PipelineConfig { j: 8, ..desk() }).unwrap();
    assert!(rep.exploration.fraction_full >= 0.9, "{}", rep.exploration.fraction_full);
}
