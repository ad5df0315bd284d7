use contagion::graphgen::{configuration_model, erdos_renyi, gw_tree};
use contagion::{derive_stream, DegreeDistribution};

fn main() -> contagion::Result<()> {
    let mu = DegreeDistribution::poisson(3.0)?;
    let g = configuration_model(10_000, &mu, &mut derive_stream(1, "example", 0))?;
    println!("config: n={} edges={} max degree={} components={}", g.n(), g.edge_count(), g.max_degree(), g.component_count());

    let er = erdos_renyi(10_000, 3.0, &mut derive_stream(1, "example", 1))?;
    println!("er:     n={} edges={} hash={}", er.n(), er.edge_count(), &er.hash()[..16]);

    let off = DegreeDistribution::poisson(2.0)?;
    let t = gw_tree(&off, &off, 6, &mut derive_stream(1, "example", 2))?;
    let mut gens = vec![0; t.height() + 1];
    for &d in t.graph.depth().unwrap() {
        gens[d] += 1;
    }
    println!("gw:     generation sizes {gens:?}");
    Ok(())
}
