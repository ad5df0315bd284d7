use contagion::expander::{run_pipeline, PipelineConfig, VerifyMode};
use contagion::graphgen::configuration_model;
use contagion::{derive_stream, DegreeDistribution};

fn main() -> contagion::Result<()> {
    let mu = DegreeDistribution::poisson(3.0)?;
    let g = configuration_model(2000, &mu, &mut derive_stream(1, "g", 0))?;
    let cfg = PipelineConfig { j: 12, radius: 1, m: 6, alpha: 0.05, verify: VerifyMode::Sampled(10_000), ..Default::default() };
    let rep = run_pipeline(&g, &mu, &cfg)?;
    let c = &rep.certificate;
    println!("W: {} balls, {:.2} full, {} quotient nodes", rep.w_size, rep.exploration.fraction_full, rep.quotient_nodes);
    println!("W0: {} vertices, {:?} ({} subsets checked, {} violations)", c.w0.len(), c.outcome, c.checked, c.violations);
    Ok(())
}
