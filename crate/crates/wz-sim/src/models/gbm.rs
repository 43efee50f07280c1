//! Scalar geometric model: the analytic anchor of the whole pipeline.
//!
//! Drift mu*y and one linear noise mode a*y on the one-dimensional space, so
//! the correction term is exactly a^2 y and the Ito, Stratonovich, and
//! constant-control skeleton solutions are closed-form exponentials.

use super::{GeometricOracle, ModelSpec, NoiseSpec};
use crate::error::Result;
use crate::operators::{DriftConstants, DriftOperator};
use crate::spaces::{CoefState, GalerkinSpace};
use std::sync::Arc;

pub struct GbmDrift {
    mu: f64,
    forcing: f64,
}

impl DriftOperator for GbmDrift {
    fn eval_into(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        out[0] = self.mu * state[0];
    }

    fn constants(&self) -> DriftConstants {
        DriftConstants {
            coercivity: 1.0,
            beta: 2.0,
            alpha: 0.0,
            zeta: 0.0,
            growth: self.mu * self.mu + 1.0,
        }
    }

    fn forcing(&self, _t: f64) -> f64 {
        self.forcing
    }
}

/// Scalar model with drift mu*y and multiplicative noise a*y, y(0) = 1.
pub fn make_gbm(mu: f64, a: f64) -> ModelSpec {
    make_gbm_with_initial(mu, a, 1.0).expect("scalar model construction cannot fail")
}

pub fn make_gbm_with_initial(mu: f64, a: f64, y0: f64) -> Result<ModelSpec> {
    let space = Arc::new(GalerkinSpace::scalar());
    let drift = Arc::new(GbmDrift {
        mu,
        // covers both the monotonicity and coercivity budgets for any mu
        forcing: 2.0 * mu.abs() + 1.0,
    });
    let noise = NoiseSpec::DiagonalLinear { gains: vec![a] }.build(&space)?;
    let initial = CoefState::new(vec![y0], 0.0)?;
    Ok(ModelSpec::new("gbm", space, drift, noise, initial)?
        .with_oracle(GeometricOracle { mu, gain: a, y0 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::correction_term;

    #[test]
    fn zero_parameters_freeze_the_state() {
        let model = make_gbm(0.0, 0.0);
        let a = model.drift.eval(0.0, &[1.0]);
        assert_eq!(a, vec![0.0]);
        let tr = correction_term(model.noise.as_ref(), 1, &[1.0]);
        assert_eq!(tr, vec![0.0]);
    }

    #[test]
    fn correction_is_a_squared_y() {
        let model = make_gbm(0.1, 0.5);
        for m in [1usize, 3, 10] {
            let tr = correction_term(model.noise.as_ref(), m, &[2.0]);
            assert!((tr[0] - 0.25 * 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_matches_hand_exponentials() {
        let model = make_gbm(0.1, 0.5);
        let oracle = model.oracle.unwrap();
        let beta = 0.37;
        let t = 0.8;
        let ito = (0.1f64 - 0.125) * t + 0.5 * beta;
        assert!((oracle.ito(t, beta) - ito.exp()).abs() < 1e-15);
        let strat = 0.1f64 * t + 0.5 * beta;
        assert!((oracle.stratonovich(t, beta) - strat.exp()).abs() < 1e-15);
        let skel = (0.1f64 + 0.5 * 0.3 - 0.125) * t;
        assert!((oracle.skeleton_constant(t, 0.3) - skel.exp()).abs() < 1e-15);
    }
}
