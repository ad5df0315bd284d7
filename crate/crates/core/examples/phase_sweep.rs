use contagion::experiments::{phase_sweep, write_sweep_csv, GraphModel, Horizon, SweepSpec};

fn main() -> contagion::Result<()> {
    let spec = SweepSpec {
        model: GraphModel::Config { mu: "poisson:3".into() },
        lambdas: vec![0.1, 1.0],
        ns: vec![50, 100, 200],
        reps: 10,
        horizon: Horizon::PerVertex(1.0),
        init: "all".into(),
        seed: 1,
        output: None,
    };
    let res = phase_sweep(&spec)?;
    for f in &res.fits {
        println!("# lambda={} -> {}", f.lambda, f.classification.label());
    }
    write_sweep_csv(&res, std::io::stdout())
}
