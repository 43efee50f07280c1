//! Dyadic Brownian paths: midpoint refinement keeps coarse grids embedded in
//! fine ones, so one realization serves every level at once.
//!
//! Run with `cargo run --example path_refinement`.

use wz_sim::noise::{sample_path, WzDriver};

fn main() {
    let path = sample_path(42, 1.0, 8, 1).unwrap();
    println!("level-3 grid of mode 1 (embedded in the level-8 sample):");
    for k in 0..=8usize {
        println!("  beta({:.3}) = {:+.6}", k as f64 / 8.0, path.value_at_level(0, 3, k));
    }
    let sub = path.subsample(3).unwrap();
    let same = (0..=8).all(|k| sub.value_fine(0, k) == path.value_at_level(0, 3, k));
    println!("subsampled path equals the restriction: {same}");

    let driver = WzDriver::new(&path, 3).unwrap();
    println!("piecewise-constant derivative on each interval:");
    for k in 0..8usize {
        println!(
            "  [{:.3}, {:.3}): {:+.4}",
            k as f64 / 8.0,
            (k + 1) as f64 / 8.0,
            driver.derivative_on_interval(k, 0)
        );
    }
    println!("(zero on the first interval by the extension convention)");
}
