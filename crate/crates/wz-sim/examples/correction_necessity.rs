//! Why the correction term matters: with it, the smoothed system converges
//! to the Ito solution; without it, to the Stratonovich solution, leaving a
//! persistent bias against the Ito closed form.
//!
//! Run with `cargo run --release --example correction_necessity`.

use wz_sim::models::make_gbm;
use wz_sim::noise::sample_path;
use wz_sim::rng;
use wz_sim::solvers::{solve_wong_zakai, SolverConfig};

fn main() {
    let model = make_gbm(0.1, 0.5);
    let oracle = model.oracle.unwrap();
    let n_paths = 200;
    let m = 8;

    for (label, correction) in [("with correction   ", true), ("without correction", false)] {
        let solver = SolverConfig {
            substeps_per_interval: 8,
            correction_enabled: correction,
            ..Default::default()
        };
        let mut err_ito = 0.0;
        let mut err_strat = 0.0;
        for p in 0..n_paths as u64 {
            let path = sample_path(rng::derive_seed(7, p), 1.0, 10, 1).unwrap();
            let wz = solve_wong_zakai(&model, &path, m, &solver).unwrap();
            let got = wz.final_state().coeffs[0];
            let b = path.value_at_level(0, 0, 1);
            err_ito += (got - oracle.ito(1.0, b)).powi(2);
            err_strat += (got - oracle.stratonovich(1.0, b)).powi(2);
        }
        println!(
            "{label}  E|Y(T)-Ito|^2 = {:.5e}   E|Y(T)-Strat|^2 = {:.5e}",
            err_ito / n_paths as f64,
            err_strat / n_paths as f64
        );
    }
    println!("(each variant converges to its own limit; the other error stays O(1))");
}
