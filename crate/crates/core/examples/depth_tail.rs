use contagion::experiments::{depth_decay, surviving_gw_tree};
use contagion::DegreeDistribution;

fn main() -> contagion::Result<()> {
    let mu = DegreeDistribution::poisson(2.0)?;
    let tree = surviving_gw_tree(&mu, 10, 1)?;
    println!("tree with {} vertices", tree.n());
    for lambda in [0.05, 0.02] {
        let d = depth_decay(&tree, lambda, 100_000, 1, 50)?;
        println!("lambda={lambda}: ratio {:?} over {:?}", d.ratio, d.fit_range);
        for (h, hits, p) in d.tail.iter().take(6) {
            println!("  P(H >= {h}) = {p:.3e} ({hits})");
        }
    }
    Ok(())
}
