//! Sampled audits of the operator hypotheses on the whole model zoo: worst
//! normalized margins per inequality, with the declared constants.
//!
//! Run with `cargo run --release --example hypothesis_audit`.

use wz_sim::models::{make_burgers, make_gbm, make_heat, make_plaplace, make_porous_media, NoiseSpec};
use wz_sim::probe::{probe_hypotheses, ProbeConfig};

fn main() {
    let zoo = vec![
        make_gbm(0.1, 0.5),
        make_heat(16, 2.0, 1.0, &NoiseSpec::DiagonalLinear { gains: vec![0.4, 0.2, 0.1] }).unwrap(),
        make_burgers(16, 2.0, 1.0, &NoiseSpec::Additive { amplitudes: vec![0.1, 0.05] }).unwrap(),
        make_plaplace(12, 2.0, 3.0, &NoiseSpec::Tanh { gains: vec![0.1, 0.05] }).unwrap(),
        make_porous_media(12, 2.0, 3.0, &NoiseSpec::Additive { amplitudes: vec![0.1] }).unwrap(),
    ];
    let cfg = ProbeConfig { n_trials: 1000, ..Default::default() };
    for model in &zoo {
        let report =
            probe_hypotheses(model.drift.as_ref(), model.noise.as_ref(), &model.space, &cfg, 1.0)
                .unwrap();
        println!("model: {} (all pass: {})", model.name, report.all_pass());
        for check in &report.checks {
            println!(
                "  {:<24} worst margin {:+.3e}   {}",
                check.name,
                check.worst_margin,
                if check.pass { "PASS" } else { "FAIL" }
            );
        }
    }
}
