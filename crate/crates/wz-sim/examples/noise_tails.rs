//! Monte-Carlo tail probabilities of the smoothed-noise sup events: both
//! families decay to zero as the level grows.
//!
//! Run with `cargo run --release --example noise_tails`.

use wz_sim::noise::tail_probability_estimate;

fn main() {
    let est = tail_probability_estimate(1.0, &[3, 4, 5, 6, 7, 8], 2.0, 2000, 42).unwrap();
    println!("m    P(per-mode sup over threshold)    P(vector sup over threshold)");
    for e in &est {
        println!("{:<4} {:<33.4} {:.4}", e.m, e.p_mode_sup, e.p_vector_sup);
    }
}
