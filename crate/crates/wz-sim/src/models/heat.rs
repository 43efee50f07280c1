//! Linear diffusion on the sine basis: diagonal drift -nu (k pi / L)^2.
//!
//! The dissipation identity <A y, y> = -nu |y|_V^2 is exact in coefficients,
//! so the declared coercivity constant 2 nu has margin zero and every
//! zero-noise mode decays by the explicit exponential.

use super::{initial_or_default, ModelSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::operators::{DriftConstants, DriftOperator};
use crate::spaces::GalerkinSpace;
use std::sync::Arc;

pub struct HeatDrift {
    /// nu (k pi / L)^2 per mode.
    pub eigenvalues: Vec<f64>,
    nu: f64,
}

impl DriftOperator for HeatDrift {
    fn eval_into(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        for ((o, s), lam) in out.iter_mut().zip(state).zip(&self.eigenvalues) {
            *o = -lam * s;
        }
    }

    fn constants(&self) -> DriftConstants {
        DriftConstants {
            coercivity: 2.0 * self.nu,
            beta: 2.0,
            alpha: 0.0,
            zeta: 0.0,
            growth: self.nu * self.nu,
        }
    }
}

pub fn make_heat(n_modes: usize, length: f64, nu: f64, noise: &NoiseSpec) -> Result<ModelSpec> {
    make_heat_with_initial(n_modes, length, nu, noise, None)
}

pub fn make_heat_with_initial(
    n_modes: usize,
    length: f64,
    nu: f64,
    noise: &NoiseSpec,
    initial: Option<Vec<f64>>,
) -> Result<ModelSpec> {
    if !(nu > 0.0) {
        return Err(Error::invalid("diffusivity nu must be positive"));
    }
    let space = Arc::new(GalerkinSpace::sine_dirichlet(n_modes, length)?);
    let eigenvalues = space.v_weights.iter().map(|v| nu * v).collect();
    let drift = Arc::new(HeatDrift { eigenvalues, nu });
    let noise_op = noise.build(&space)?;
    let initial = initial_or_default(n_modes, initial)?;
    ModelSpec::new("heat", space, drift, noise_op, initial)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dissipation_identity_is_exact() {
        let model = make_heat(8, 2.0, 1.5, &NoiseSpec::None).unwrap();
        let y: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).sin() + 0.2).collect();
        let a = model.drift.eval(0.0, &y);
        let lhs = model.space.dual_pairing(&a, &y);
        let rhs = -1.5 * model.space.norm_v(&y).powi(2);
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn rejects_nonpositive_diffusivity() {
        assert!(make_heat(4, 1.0, 0.0, &NoiseSpec::None).is_err());
        assert!(make_heat(4, 1.0, -1.0, &NoiseSpec::None).is_err());
    }

    #[test]
    fn drift_is_diagonal() {
        let model = make_heat(4, 2.0, 1.0, &NoiseSpec::None).unwrap();
        let mut e2 = vec![0.0; 4];
        e2[1] = 1.0;
        let a = model.drift.eval(0.0, &e2);
        let lam = (2.0 * std::f64::consts::PI / 2.0).powi(2);
        assert!((a[1] + lam).abs() < 1e-12);
        assert!(a[0] == 0.0 && a[2] == 0.0 && a[3] == 0.0);
    }
}
