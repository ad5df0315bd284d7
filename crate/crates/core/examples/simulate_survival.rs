use contagion::dynamics::{survival_time, Init};
use contagion::graphgen::configuration_model;
use contagion::{derive_stream, DegreeDistribution};

fn main() -> contagion::Result<()> {
    let mu = DegreeDistribution::poisson(3.0)?;
    let g = configuration_model(500, &mu, &mut derive_stream(1, "example", 0))?;
    for lambda in [0.1, 0.3, 1.0] {
        let s = survival_time(&g, lambda, &Init::All, 500.0, 200, 1)?;
        println!(
            "lambda={lambda:<4} median={:?} censored={:.2} mean>={:.3}",
            s.median, s.censored_fraction, s.mean_lower_bound
        );
    }
    Ok(())
}
