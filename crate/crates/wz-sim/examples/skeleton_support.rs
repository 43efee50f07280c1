//! The controlled skeleton and its noise-cancellation companion: the scalar
//! skeleton against its closed form, then the spectral-model companion
//! converging to the deterministic skeleton as the level grows.
//!
//! Run with `cargo run --release --example skeleton_support`.

use wz_sim::analysis::{skeleton_convergence_study, StudyConfig};
use wz_sim::models::{make_gbm, make_heat, NoiseSpec};
use wz_sim::noise::sample_path;
use wz_sim::operators::{ControlPath, ControlledBundle};
use wz_sim::solvers::{solve_controlled, SolverConfig};

fn main() {
    // scalar skeleton with constant control vs closed form
    let model = make_gbm(0.1, 0.5);
    let oracle = model.oracle.unwrap();
    let g = 0.3;
    let path = sample_path(1, 1.0, 10, 1).unwrap();
    let bundle = ControlledBundle::skeleton(model.noise.clone(), 1, ControlPath::constant(vec![g], 1.0));
    let cfg = SolverConfig { substeps_per_interval: 16, ..Default::default() };
    let traj = solve_controlled(&model, &bundle, &path, 8, &cfg).unwrap();
    let got = traj.final_state().coeffs[0];
    let exact = oracle.skeleton_constant(1.0, g);
    println!("scalar skeleton at T: {got:.8} vs closed form {exact:.8}");

    // spectral-model skeleton study with a sinusoidal first-mode control
    let heat = make_heat(16, 2.0, 1.0, &NoiseSpec::DiagonalLinear { gains: vec![0.4, 0.2, 0.1] })
        .unwrap();
    let control = ControlPath::sampled(1.0, 256, 3, |t| {
        vec![(std::f64::consts::TAU * t).sin(), 0.0, 0.0]
    });
    let mut cfg = StudyConfig::new(1.0, vec![3, 4, 5, 6, 7], 60, 42);
    cfg.solver.substeps_per_interval = 64;
    let report = skeleton_convergence_study(&heat, &control, &cfg).unwrap();
    println!("level   E[sup^2 companion-skeleton]");
    for (i, m) in report.m_levels.iter().enumerate() {
        println!("{m:>5}   {:.6e}", report.mean_sq_sup_error[i]);
    }
    println!("verdict: {}", if report.verdict.pass { "PASS" } else { "FAIL" });
}
