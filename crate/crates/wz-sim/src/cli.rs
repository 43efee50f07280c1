//! Batch command runners behind the thin binary: each loads a config, runs
//! one experiment family, writes JSON/CSV reports plus a manifest, and maps
//! the outcome to an exit code.
//!
//! Exit codes: 0 pass, 1 verdict fail, 2 usage/config error, 3 blow-up quota
//! breach.

use crate::analysis::{
    convergence_study, exit_fraction_study, increment_modulus, integral_identity_residual,
    skeleton_convergence_study, ConvergenceReport,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::noise::{is_nonincreasing_within_se, sample_path, tail_probability_estimate};
use crate::operators::check_correction_bound;
use crate::output::{ensure_dir, out_file, write_json, write_text, Manifest};
use crate::probe::{probe_hypotheses, sample_state};
use crate::rng;
use crate::solvers::solve_ito;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERDICT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub n_paths: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub emit_trajectory: bool,
}

fn apply_overrides(cfg: &mut ExperimentConfig, over: &RunOverrides) {
    if let Some(seed) = over.seed {
        cfg.run.seed = seed;
        cfg.probe.seed = seed;
    }
    if let Some(n) = over.n_paths {
        cfg.run.n_paths = n;
    }
    if let Some(dir) = &over.out_dir {
        cfg.run.output_dir = dir.display().to_string();
    }
}

fn finalize(
    command: &str,
    cfg: &ExperimentConfig,
    dir: &Path,
    started: Instant,
) -> Result<()> {
    let manifest = Manifest::new(
        command,
        cfg.run.seed,
        &cfg.source,
        started.elapsed().as_secs_f64(),
    );
    write_json(&out_file(dir, "manifest.json"), &manifest)
}

fn exit_for_report(report: &ConvergenceReport, quota: f64) -> i32 {
    if report.verdict.pass {
        EXIT_PASS
    } else if report.meta.n_blowups as f64 > quota * report.meta.n_paths as f64 {
        EXIT_BLOWUP
    } else {
        EXIT_VERDICT_FAIL
    }
}

/// One model, one seed: a single Ito run, trajectory/summary emission.
pub fn cmd_simulate(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let n_modes = model.noise.mode_count().max(1);
    let level = cfg.solver.dt_level.max(cfg.solver.store_level);
    let path = sample_path(cfg.run.seed, cfg.run.t_horizon, level, n_modes)?;
    let traj = match solve_ito(&model, &path, &cfg.solver) {
        Ok(t) => t,
        Err(Error::Blowup { time }) => {
            eprintln!("numerical blow-up at t = {time}");
            finalize("simulate", &cfg, &dir, started)?;
            return Ok(EXIT_BLOWUP);
        }
        Err(e) => return Err(e),
    };

    #[derive(serde::Serialize)]
    struct Summary {
        model: String,
        t_horizon: f64,
        seed: u64,
        final_norm_h: f64,
        final_norm_v: f64,
        sup_norm_h: f64,
        v_beta_integral: f64,
        exited_at: Option<f64>,
        n_stored: usize,
    }
    let summary = Summary {
        model: model.name.clone(),
        t_horizon: cfg.run.t_horizon,
        seed: cfg.run.seed,
        final_norm_h: *traj.norms_h.last().unwrap(),
        final_norm_v: *traj.norms_v.last().unwrap(),
        sup_norm_h: traj.sup_norm_h,
        v_beta_integral: traj.v_beta_integral,
        exited_at: traj.exited_at,
        n_stored: traj.len(),
    };
    write_json(&out_file(&dir, "summary.json"), &summary)?;
    if over.emit_trajectory {
        let mut buf = Vec::new();
        traj.write_csv(&mut buf)?;
        write_text(&out_file(&dir, "trajectory.csv"), &String::from_utf8_lossy(&buf))?;
    }
    if cfg.output.emit_path {
        let mut buf = Vec::new();
        path.write_csv(&mut buf)?;
        write_text(&out_file(&dir, "path.csv"), &String::from_utf8_lossy(&buf))?;
    }
    finalize("simulate", &cfg, &dir, started)?;
    Ok(EXIT_PASS)
}

/// Smoothed-noise strong-convergence study.
pub fn cmd_converge(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let report = convergence_study(&model, &cfg.study_config())?;
    write_json(&out_file(&dir, "convergence.json"), &report)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_text(&out_file(&dir, "convergence.csv"), &String::from_utf8_lossy(&buf))?;
    finalize("converge", &cfg, &dir, started)?;
    println!(
        "convergence: slope {:.3} +/- {:.3}, verdict {}",
        report.fitted_log2_slope,
        report.slope_ci_halfwidth,
        if report.verdict.pass { "PASS" } else { "FAIL" }
    );
    Ok(exit_for_report(&report, cfg.thresholds.blowup_quota))
}

/// Controlled-skeleton convergence study.
pub fn cmd_skeleton(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let control = cfg.build_control(model.noise.mode_count());
    let report = skeleton_convergence_study(&model, &control, &cfg.study_config())?;
    write_json(&out_file(&dir, "skeleton.json"), &report)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_text(&out_file(&dir, "skeleton.csv"), &String::from_utf8_lossy(&buf))?;
    finalize("skeleton", &cfg, &dir, started)?;
    println!(
        "skeleton: slope {:.3}, verdict {}",
        report.fitted_log2_slope,
        if report.verdict.pass { "PASS" } else { "FAIL" }
    );
    Ok(exit_for_report(&report, cfg.thresholds.blowup_quota))
}

/// Increment-modulus decay study.
pub fn cmd_modulus(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let report = increment_modulus(&model, &cfg.study_config())?;
    write_json(&out_file(&dir, "modulus.json"), &report)?;
    let mut csv = String::from("m,variant,mean,stderr\n");
    for (vi, label) in ["ref_floor", "wz_floor", "ref_prev", "wz_prev", "ref_ceil", "wz_ceil"]
        .iter()
        .enumerate()
    {
        for (li, m) in report.m_levels.iter().enumerate() {
            csv.push_str(&format!(
                "{m},{label},{},{}\n",
                report.means[vi][li], report.std_errors[vi][li]
            ));
        }
    }
    write_text(&out_file(&dir, "modulus.csv"), &csv)?;
    finalize("modulus", &cfg, &dir, started)?;
    println!(
        "modulus: slopes {:?} (reference {}), verdict {}",
        report.slopes,
        report.reference_slope,
        if report.verdict.pass { "PASS" } else { "FAIL" }
    );
    Ok(if report.verdict.pass { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Hypothesis audits with the model's declared constants.
pub fn cmd_probe(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let report = probe_hypotheses(
        model.drift.as_ref(),
        model.noise.as_ref(),
        &model.space,
        &cfg.probe,
        cfg.run.t_horizon,
    )?;
    let samples: Vec<Vec<f64>> = (0..200u64)
        .map(|i| sample_state(&model.space, cfg.probe.r_max, cfg.probe.seed, i, 9))
        .collect();
    let correction = check_correction_bound(
        model.noise.as_ref(),
        &model.space,
        model.noise.mode_count().max(1),
        &samples,
        cfg.probe.tolerance,
    )?;

    #[derive(serde::Serialize)]
    struct ProbeOut<'a> {
        hypotheses: &'a crate::probe::HypothesisReport,
        correction_bound: &'a crate::operators::CorrectionBoundReport,
        all_pass: bool,
    }
    let all_pass = report.all_pass() && correction.pass;
    write_json(
        &out_file(&dir, "hypotheses.json"),
        &ProbeOut { hypotheses: &report, correction_bound: &correction, all_pass },
    )?;
    finalize("probe", &cfg, &dir, started)?;
    for check in &report.checks {
        println!(
            "probe {:<24} worst margin {:+.3e}  {}",
            check.name,
            check.worst_margin,
            if check.pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "probe correction_bound       worst margin {:+.3e}  {}",
        correction.worst_growth_violation.max(correction.worst_pairing_violation),
        if correction.pass { "PASS" } else { "FAIL" }
    );
    Ok(if all_pass { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Exact finite-sum check of the delayed-coefficient integral identity.
pub fn cmd_identity(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let n = model.dim();
    let max_m = *cfg.identity.m_levels.iter().max().unwrap_or(&6);
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for s in 0..cfg.identity.n_seeds as u64 {
        let seed = rng::derive_seed(cfg.run.seed, s);
        let path = sample_path(seed, cfg.run.t_horizon, max_m + 2, model.noise.mode_count().max(1))?;
        for &m in &cfg.identity.m_levels {
            let states: Vec<Vec<f64>> = (0..=(1usize << m))
                .map(|k| (0..n).map(|d| rng::normal(seed, 7, k as u64, d as u64)).collect())
                .collect();
            let check = integral_identity_residual(
                model.noise.as_ref(),
                &model.space,
                &path,
                m,
                &states,
                cfg.run.t_horizon,
            )?;
            worst = worst.max(check.residual / check.scale);
            rows.push((s, m, check.residual, check.scale));
        }
    }
    let pass = worst <= cfg.identity.tolerance_scale;

    #[derive(serde::Serialize)]
    struct IdentityOut {
        worst_relative_residual: f64,
        tolerance_scale: f64,
        n_seeds: usize,
        m_levels: Vec<u32>,
        pass: bool,
    }
    write_json(
        &out_file(&dir, "identity.json"),
        &IdentityOut {
            worst_relative_residual: worst,
            tolerance_scale: cfg.identity.tolerance_scale,
            n_seeds: cfg.identity.n_seeds,
            m_levels: cfg.identity.m_levels.clone(),
            pass,
        },
    )?;
    let mut csv = String::from("seed_index,m,residual,scale\n");
    for (s, m, r, sc) in rows {
        csv.push_str(&format!("{s},{m},{r},{sc}\n"));
    }
    write_text(&out_file(&dir, "identity.csv"), &csv)?;
    finalize("identity", &cfg, &dir, started)?;
    println!(
        "identity: worst relative residual {worst:.3e} (tolerance {}): {}",
        cfg.identity.tolerance_scale,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Monte-Carlo tail probabilities for the smoothed-noise sup events.
pub fn cmd_tails(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let estimates = tail_probability_estimate(
        cfg.run.t_horizon,
        &cfg.run.m_levels,
        cfg.tails.delta,
        cfg.tails.n_samples,
        cfg.run.seed,
    )?;
    let mode_series: Vec<(f64, usize)> =
        estimates.iter().map(|e| (e.p_mode_sup, e.n_samples)).collect();
    let vec_series: Vec<(f64, usize)> =
        estimates.iter().map(|e| (e.p_vector_sup, e.n_samples)).collect();
    let se_factor = cfg.thresholds.inversion_se_factor;
    let last = estimates.last().unwrap();
    let pass = is_nonincreasing_within_se(&mode_series, se_factor)
        && is_nonincreasing_within_se(&vec_series, se_factor)
        && last.p_mode_sup < cfg.thresholds.tail_final_max
        && last.p_vector_sup < cfg.thresholds.tail_final_max;

    #[derive(serde::Serialize)]
    struct TailsOut<'a> {
        delta: f64,
        estimates: &'a [crate::noise::TailEstimate],
        pass: bool,
    }
    write_json(&out_file(&dir, "tails.json"), &TailsOut { delta: cfg.tails.delta, estimates: &estimates, pass })?;
    let mut csv = String::from("m,p_mode_sup,p_vector_sup,n_samples\n");
    for e in &estimates {
        csv.push_str(&format!("{},{},{},{}\n", e.m, e.p_mode_sup, e.p_vector_sup, e.n_samples));
    }
    write_text(&out_file(&dir, "tails.csv"), &csv)?;
    finalize("tails", &cfg, &dir, started)?;
    for e in &estimates {
        println!("tails m={}: per-mode {:.4}, vector {:.4}", e.m, e.p_mode_sup, e.p_vector_sup);
    }
    println!("tails verdict: {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Guard exit-fraction table across configured thresholds.
pub fn cmd_guards(mut cfg: ExperimentConfig, over: &RunOverrides) -> Result<i32> {
    apply_overrides(&mut cfg, over);
    let started = Instant::now();
    let dir = PathBuf::from(&cfg.run.output_dir);
    ensure_dir(&dir)?;
    let model = cfg.build_model()?;
    let report = exit_fraction_study(
        &model,
        cfg.run.t_horizon,
        &cfg.guards,
        cfg.run.n_paths,
        cfg.run.seed,
        &cfg.solver,
    )?;
    write_json(&out_file(&dir, "guards.json"), &report)?;
    finalize("guards", &cfg, &dir, started)?;
    for (g, f) in report.guards.iter().zip(&report.exit_fractions) {
        println!("guard {g}: exit fraction {f:.4}");
    }
    Ok(if report.nonincreasing_in_guard { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

/// Re-render previously written reports in a directory.
pub fn cmd_report(dir: &Path) -> Result<i32> {
    let mut all_pass = true;
    let mut seen = 0usize;
    for name in [
        "convergence.json",
        "skeleton.json",
        "modulus.json",
        "hypotheses.json",
        "identity.json",
        "tails.json",
        "guards.json",
        "summary.json",
    ] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        seen += 1;
        let text = std::fs::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{name}: {e}")))?;
        let pass = value
            .get("verdict")
            .and_then(|v| v.get("pass"))
            .or_else(|| value.get("pass"))
            .or_else(|| value.get("all_pass"))
            .and_then(|v| v.as_bool());
        match pass {
            Some(p) => {
                all_pass &= p;
                println!("{name}: {}", if p { "PASS" } else { "FAIL" });
            }
            None => println!("{name}: (informational)"),
        }
    }
    if seen == 0 {
        return Err(Error::invalid(format!("no reports found in {}", dir.display())));
    }
    Ok(if all_pass { EXIT_PASS } else { EXIT_VERDICT_FAIL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ReportMeta, Verdict};

    #[test]
    fn blowup_quota_breach_maps_to_exit_three() {
        let mk = |n_blowups: usize, pass: bool| ConvergenceReport {
            m_levels: vec![3, 4],
            mean_sq_sup_error: vec![1.0, 0.1],
            std_error: vec![0.1, 0.01],
            fitted_log2_slope: -1.0,
            slope_ci_halfwidth: 0.1,
            verdict: Verdict { pass, reasons: vec![] },
            meta: ReportMeta {
                model: "x".into(),
                seed: 0,
                n_paths: 100,
                n_blowups,
                config_hash: "0".into(),
            },
        };
        assert_eq!(exit_for_report(&mk(0, true), 0.01), EXIT_PASS);
        assert_eq!(exit_for_report(&mk(0, false), 0.01), EXIT_VERDICT_FAIL);
        assert_eq!(exit_for_report(&mk(5, false), 0.01), EXIT_BLOWUP);
    }

    #[test]
    fn simulate_writes_expected_files() {
        let tmp = std::env::temp_dir().join(format!("wzsim-test-{}", std::process::id()));
        let config = format!(
            "[model]\nname = \"gbm\"\nmu = 0.1\na = 0.5\n\n[run]\nseed = 3\noutput_dir = \"{}\"\n\n[solver]\ndt_level = 6\nstore_level = 6\n\n[output]\nemit_path = true\n",
            tmp.display()
        );
        let cfg = ExperimentConfig::from_str(&config).unwrap();
        let code = cmd_simulate(cfg, &RunOverrides { emit_trajectory: true, ..Default::default() }).unwrap();
        assert_eq!(code, EXIT_PASS);
        assert!(tmp.join("summary.json").exists());
        assert!(tmp.join("trajectory.csv").exists());
        assert!(tmp.join("path.csv").exists());
        assert!(tmp.join("manifest.json").exists());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 3);
        assert!(manifest["config_hash"].as_str().unwrap().len() == 16);
        std::fs::remove_dir_all(&tmp).ok();
    }
}
