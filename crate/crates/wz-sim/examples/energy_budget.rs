//! Uniform energy estimates across levels: sup of the squared H norm plus
//! the accumulated V-power integral stays flat in the level.
//!
//! Run with `cargo run --release --example energy_budget`.

use wz_sim::analysis::{energy_study, StudyConfig};
use wz_sim::models::{make_burgers, make_heat, NoiseSpec};

fn main() {
    let heat = make_heat(16, 2.0, 1.0, &NoiseSpec::DiagonalLinear { gains: vec![0.4, 0.2, 0.1] })
        .unwrap();
    let burgers =
        make_burgers(16, 2.0, 1.0, &NoiseSpec::Additive { amplitudes: vec![0.1, 0.05] }).unwrap();
    for (model, tamed) in [(heat, false), (burgers, true)] {
        let mut cfg = StudyConfig::new(1.0, vec![3, 4, 5, 6], 80, 42);
        cfg.solver.substeps_per_interval = 64;
        cfg.solver.taming_enabled = tamed;
        let report = energy_study(&model, &cfg).unwrap();
        println!("model: {}", model.name);
        for (i, m) in report.m_levels.iter().enumerate() {
            println!("  m={m}: mean energy {:.6}", report.mean_energy[i]);
        }
        println!("  max/min ratio {:.4} -> {}", report.ratio_max_min,
            if report.verdict.pass { "PASS" } else { "FAIL" });
    }
}
