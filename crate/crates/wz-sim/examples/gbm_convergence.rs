//! Strong convergence of the smoothed system toward the Ito diffusion on the
//! scalar model, measured against the closed-form solution.
//!
//! Run with `cargo run --release --example gbm_convergence`.

use wz_sim::analysis::{convergence_study, StudyConfig};
use wz_sim::models::make_gbm;

fn main() {
    let model = make_gbm(0.1, 0.5);
    let mut cfg = StudyConfig::new(1.0, vec![3, 4, 5, 6, 7, 8], 200, 42);
    cfg.solver.substeps_per_interval = 8;
    cfg.thresholds.reduction_factor = 8.0;

    let report = convergence_study(&model, &cfg).expect("study runs");
    println!("level   E[sup^2 error]   std error");
    for (i, m) in report.m_levels.iter().enumerate() {
        println!(
            "{m:>5}   {:<14.6e}   {:.2e}",
            report.mean_sq_sup_error[i], report.std_error[i]
        );
    }
    println!(
        "fitted log2 slope: {:.3} +/- {:.3}",
        report.fitted_log2_slope, report.slope_ci_halfwidth
    );
    println!("verdict: {}", if report.verdict.pass { "PASS" } else { "FAIL" });
}
