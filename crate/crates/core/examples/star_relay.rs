use contagion::experiments::{path_relay_grid, star_sweep};

fn main() -> contagion::Result<()> {
    let s = star_sweep(&[4, 8, 16, 32], 1.0, 200, 1e4, 1)?;
    for (d, st) in &s.rows {
        println!("star d={d:<3} median={:?} censored={}", st.median, st.censored);
    }
    println!("slope of log median: {:?} ± {:?}", s.slope, s.slope_se);

    for p in path_relay_grid(5, 400, 1)? {
        println!("path length {}: {:?}", p.len, p.found);
    }
    Ok(())
}
