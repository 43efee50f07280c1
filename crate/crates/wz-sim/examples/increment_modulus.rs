//! Decay of the anchored time-increment integrals along dyadic levels, with
//! fitted log2 slopes (the qualitative reference rate is -3/4).
//!
//! Run with `cargo run --release --example increment_modulus`.

use wz_sim::analysis::{increment_modulus, StudyConfig};
use wz_sim::models::make_gbm;

fn main() {
    let model = make_gbm(0.1, 0.5);
    let mut cfg = StudyConfig::new(1.0, vec![4, 5, 6, 7, 8], 150, 42);
    cfg.solver.substeps_per_interval = 8;
    let report = increment_modulus(&model, &cfg).unwrap();
    let labels = ["ref/floor", "wz/floor", "ref/prev", "wz/prev", "ref/ceil", "wz/ceil"];
    println!("variant     slope    per-level means");
    for (vi, label) in labels.iter().enumerate() {
        println!(
            "{label:<11} {:+.3}   {:?}",
            report.slopes[vi],
            report.means[vi].iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()
        );
    }
    println!("reference slope: {}", report.reference_slope);
    println!("verdict: {}", if report.verdict.pass { "PASS" } else { "FAIL" });
}
