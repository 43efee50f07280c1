//! Sampled audits of the declared operator hypotheses.
//!
//! Each inequality is checked on randomly drawn states inside an H-ball and
//! reported as a worst signed margin, normalized by the magnitude of its
//! right-hand side. These are refutation probes, not proofs: a positive
//! margin beyond tolerance falsifies the declared constants.

use crate::error::{Error, Result};
use crate::operators::{DriftOperator, NoiseOperator};
use crate::rng;
use crate::spaces::GalerkinSpace;

#[derive(Debug, Clone, serde::Serialize)]
pub struct ProbeConfig {
    pub r_max: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Absolute tolerance on normalized margins.
    pub tolerance: f64,
    /// Grid points for the hemicontinuity scan over lambda in [-1, 1].
    pub hemi_points: usize,
    /// Relative jump tolerance for the hemicontinuity scan.
    pub hemi_tol: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            r_max: 10.0,
            n_trials: 1000,
            seed: 2024,
            tolerance: 1e-8,
            hemi_points: 201,
            hemi_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub worst_margin: f64,
    /// H-norms of the states realizing the worst margin.
    pub argmax_sample_norms: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HypothesisReport {
    pub checks: Vec<InequalityCheck>,
    pub n_trials: usize,
    pub r_max: f64,
    /// Samples on which an operator returned a non-finite value.
    pub non_finite_samples: usize,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.non_finite_samples == 0 && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct MarginTracker {
    name: &'static str,
    worst: f64,
    arg_norms: Vec<f64>,
}

impl MarginTracker {
    fn new(name: &'static str) -> Self {
        MarginTracker { name, worst: f64::NEG_INFINITY, arg_norms: Vec::new() }
    }

    fn update(&mut self, lhs: f64, rhs: f64, norms: &[f64]) {
        let margin = (lhs - rhs) / (1.0 + rhs.abs());
        if margin > self.worst {
            self.worst = margin;
            self.arg_norms = norms.to_vec();
        }
    }

    fn finish(self, tol: f64) -> InequalityCheck {
        InequalityCheck {
            name: self.name.to_string(),
            worst_margin: self.worst,
            argmax_sample_norms: self.arg_norms,
            pass: self.worst <= tol,
        }
    }
}

/// Draws a state with `|y|_H <= r_max` (gaussian direction, uniform radius).
pub fn sample_state(space: &GalerkinSpace, r_max: f64, seed: u64, trial: u64, slot: u64) -> Vec<f64> {
    let n = space.n_modes;
    let mut y: Vec<f64> = (0..n)
        .map(|k| rng::normal(seed, 0x51a7 + slot, k as u64, trial))
        .collect();
    let norm = space.norm_h(&y);
    if norm > 0.0 {
        let radius = r_max * rng::uniform(seed, 0x51a8 + slot, 0, trial);
        let scale = radius / norm;
        for c in y.iter_mut() {
            *c *= scale;
        }
    }
    y
}

/// Audits the drift/noise inequality hypotheses with the operators' declared
/// constants on `n_trials` sampled states (pairs where the inequality needs
/// two arguments), plus a lambda-grid hemicontinuity scan.
pub fn probe_hypotheses(
    drift: &dyn DriftOperator,
    noise: &dyn NoiseOperator,
    space: &GalerkinSpace,
    cfg: &ProbeConfig,
    t_horizon: f64,
) -> Result<HypothesisReport> {
    if cfg.n_trials == 0 {
        return Err(Error::invalid("n_trials must be positive"));
    }
    let consts = drift.constants();
    let nconsts = noise.constants();
    let beta = consts.beta;
    let n = space.n_modes;
    let modes = noise.mode_count();

    let mut monotone = MarginTracker::new("local_monotonicity");
    let mut noise_lip = MarginTracker::new("noise_lipschitz");
    let mut rho_growth = MarginTracker::new("rho_eta_growth");
    let mut kappa_growth = MarginTracker::new("kappa_varkappa_growth");
    let mut coercive = MarginTracker::new("coercivity");
    let mut drift_growth = MarginTracker::new("drift_growth");
    let mut noise_growth = MarginTracker::new("noise_growth");
    let mut hemi = MarginTracker::new("hemicontinuity");

    let mut non_finite = 0usize;
    let mut a1 = vec![0.0; n];
    let mut a2 = vec![0.0; n];
    let mut s1 = vec![0.0; n];
    let mut s2 = vec![0.0; n];

    for trial in 0..cfg.n_trials as u64 {
        let t = t_horizon * rng::uniform(cfg.seed, 0x7a11, 0, trial);
        let y1 = sample_state(space, cfg.r_max, cfg.seed, trial, 0);
        let y2 = sample_state(space, cfg.r_max, cfg.seed, trial, 1);
        drift.eval_into(t, &y1, &mut a1);
        drift.eval_into(t, &y2, &mut a2);
        if a1.iter().chain(a2.iter()).any(|v| !v.is_finite()) {
            non_finite += 1;
            continue;
        }
        let f_t = drift.forcing(t);
        let h1 = space.norm_h(&y1);
        let h2 = space.norm_h(&y2);
        let v1 = space.norm_v(&y1);
        let diff: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let diff_h2 = space.norm_h(&diff).powi(2);
        let norms_pair = [h1, h2];

        // (local monotonicity) 2<A(y1)-A(y2), y1-y2> against (f + rho + eta) |d|_H^2
        let a_diff: Vec<f64> = a1.iter().zip(&a2).map(|(a, b)| a - b).collect();
        let lhs = 2.0 * space.dual_pairing(&a_diff, &diff);
        let rhs = (f_t + drift.rho(&y1) + drift.eta(&y2)) * diff_h2;
        monotone.update(lhs, rhs, &norms_pair);

        // (noise Lipschitz) HS-norm of the difference against (kappa + varkappa) |d|_H^2
        let mut hs_diff = 0.0;
        let mut finite = true;
        for mode in 0..modes {
            noise.apply_mode_into(&y1, mode, &mut s1);
            noise.apply_mode_into(&y2, mode, &mut s2);
            if s1.iter().chain(s2.iter()).any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
            let d: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a - b).collect();
            hs_diff += space.norm_h(&d).powi(2);
        }
        if !finite {
            non_finite += 1;
            continue;
        }
        let rhs = (noise.kappa(&y1) + noise.varkappa(&y2)) * diff_h2;
        noise_lip.update(hs_diff, rhs, &norms_pair);

        // (growth of rho/eta)
        let lhs = drift.rho(&y1).abs() + drift.eta(&y1).abs();
        let rhs = consts.growth * (1.0 + v1.powf(beta)) * (1.0 + h1.powf(consts.zeta));
        rho_growth.update(lhs, rhs, &[h1]);

        // (growth of kappa/varkappa)
        let lhs = noise.kappa(&y1).abs() + noise.varkappa(&y1).abs();
        let rhs = nconsts.c_kappa * (1.0 + h1.powf(consts.zeta));
        kappa_growth.update(lhs, rhs, &[h1]);

        // (coercivity) 2<A(y), y> against 2 f (1 + |y|_H^2) - L_A |y|_V^beta
        let lhs = 2.0 * space.dual_pairing(&a1, &y1);
        let rhs = 2.0 * f_t * (1.0 + h1 * h1) - consts.coercivity * v1.powf(beta);
        coercive.update(lhs, rhs, &[h1]);

        // (drift growth) dual-norm bound
        let lhs = space.norm_vstar(&a1).powf(beta / (beta - 1.0));
        let rhs = (f_t + consts.growth * v1.powf(beta)) * (1.0 + h1.powf(consts.alpha));
        drift_growth.update(lhs, rhs, &[h1]);

        // (noise growth) HS norm against K (1 + |y|_H^2)
        let mut hs = 0.0;
        for mode in 0..modes {
            noise.apply_mode_into(&y1, mode, &mut s1);
            hs += space.norm_h(&s1).powi(2);
        }
        let rhs = nconsts.k_growth * (1.0 + h1 * h1);
        noise_growth.update(hs, rhs, &[h1]);
    }

    // Hemicontinuity: lambda -> <A(t, x1 + lambda x2), x> sampled on a grid;
    // the largest jump between neighbours must stay below a tolerance scaled
    // by the overall magnitude of the scan.
    let hemi_trials = 8usize;
    for trial in 0..hemi_trials as u64 {
        let t = t_horizon * rng::uniform(cfg.seed, 0x7a12, 0, trial);
        let x1 = sample_state(space, cfg.r_max, cfg.seed, trial, 2);
        let x2 = sample_state(space, cfg.r_max, cfg.seed, trial, 3);
        let x = sample_state(space, cfg.r_max, cfg.seed, trial, 4);
        let mut prev = f64::NAN;
        let mut max_jump = 0.0f64;
        let mut max_abs = 0.0f64;
        let mut probe = vec![0.0; n];
        for j in 0..cfg.hemi_points {
            let lambda = -1.0 + 2.0 * j as f64 / (cfg.hemi_points - 1) as f64;
            for (p, (u1, u2)) in probe.iter_mut().zip(x1.iter().zip(&x2)) {
                *p = u1 + lambda * u2;
            }
            drift.eval_into(t, &probe, &mut a1);
            let value = space.dual_pairing(&a1, &x);
            if !value.is_finite() {
                non_finite += 1;
                break;
            }
            max_abs = max_abs.max(value.abs());
            if !prev.is_nan() {
                max_jump = max_jump.max((value - prev).abs());
            }
            prev = value;
        }
        let h_norms = [space.norm_h(&x1), space.norm_h(&x2)];
        hemi.update(max_jump, cfg.hemi_tol * (1.0 + max_abs), &h_norms);
    }

    let tol = cfg.tolerance;
    Ok(HypothesisReport {
        checks: vec![
            monotone.finish(tol),
            noise_lip.finish(tol),
            rho_growth.finish(tol),
            kappa_growth.finish(tol),
            coercive.finish(tol),
            drift_growth.finish(tol),
            noise_growth.finish(tol),
            hemi.finish(tol),
        ],
        n_trials: cfg.n_trials,
        r_max: cfg.r_max,
        non_finite_samples: non_finite,
    })
}
