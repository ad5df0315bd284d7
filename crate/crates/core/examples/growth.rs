use contagion::expander::{run_pipeline, PipelineConfig};
use contagion::experiments::{expander_growth, single_vertex_start};
use contagion::graphgen::configuration_model;
use contagion::{derive_stream, DegreeDistribution};

fn main() -> contagion::Result<()> {
    let mu = DegreeDistribution::poisson(3.0)?;
    let g = configuration_model(2000, &mu, &mut derive_stream(1, "g", 0))?;
    let cfg = PipelineConfig { j: 12, radius: 1, m: 6, ..Default::default() };
    let w0 = run_pipeline(&g, &mu, &cfg)?.certificate.w0;
    println!("|W0| = {}", w0.len());
    for row in expander_growth(&g, &w0, cfg.alpha, 2.0, 1.0, &[1, 2, 5, 50], 200, 1)? {
        println!("a={:<3} failure frequency {:.3} skipped={}", row.a, row.failure_frequency, row.skipped);
    }
    let s = single_vertex_start(&g, &w0, 2.0, 10.0, 400, 1)?;
    println!("survival from one vertex: all {:.3}, in W0 {:.3}, outside {:.3}", s.overall.fraction, s.in_w0.fraction, s.outside_w0.fraction);
    Ok(())
}
