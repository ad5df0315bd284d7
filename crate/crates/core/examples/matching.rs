use contagion::graphgen::{cutoff_line_match, shuffle_pairing};
use contagion::derive_stream;
use std::collections::BTreeMap;

fn main() -> contagion::Result<()> {
    let degs = [2, 2, 2];
    let mut rng = derive_stream(1, "example", 0);
    let mut cut = BTreeMap::new();
    let mut shuf = BTreeMap::new();
    for _ in 0..15_000 {
        let r = cutoff_line_match(&degs, |u| u.lowest().unwrap(), &mut rng)?;
        *cut.entry(r.graph.matching().to_vec()).or_insert(0) += 1;
        *shuf.entry(shuffle_pairing(&degs, &mut rng)?.matching().to_vec()).or_insert(0) += 1;
    }
    for (m, c) in &cut {
        println!("{m:?} cutoff {c:>5} shuffle {:>5}", shuf.get(m).unwrap_or(&0));
    }
    Ok(())
}
