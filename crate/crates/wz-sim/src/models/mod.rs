//! The model zoo: concrete (space, drift, noise) instances with declared
//! hypothesis constants and closed-form pieces where available.

mod burgers;
mod gbm;
mod heat;
mod noise_spec;
mod plaplace;
mod porous;

pub use burgers::{make_burgers, make_burgers_with_initial};
pub use gbm::{make_gbm, make_gbm_with_initial};
pub use heat::{make_heat, make_heat_with_initial};
pub use noise_spec::{AdditiveNoise, DiagonalLinearNoise, NoiseSpec, TanhNoise};
pub use plaplace::make_plaplace;
pub use porous::make_porous_media;

use crate::error::{Error, Result};
use crate::operators::{DriftOperator, NoiseOperator};
use crate::spaces::{CoefState, GalerkinSpace};
use std::sync::Arc;

/// Closed-form reference solutions for the scalar sanity model.
#[derive(Debug, Clone, Copy)]
pub struct GeometricOracle {
    pub mu: f64,
    pub gain: f64,
    pub y0: f64,
}

impl GeometricOracle {
    /// Ito solution y0 exp((mu - a^2/2) t + a beta(t)).
    pub fn ito(&self, t: f64, beta: f64) -> f64 {
        self.y0 * ((self.mu - 0.5 * self.gain * self.gain) * t + self.gain * beta).exp()
    }

    /// Stratonovich solution y0 exp(mu t + a beta(t)); the limit reached when
    /// the correction term is dropped from the smoothed system.
    pub fn stratonovich(&self, t: f64, beta: f64) -> f64 {
        self.y0 * (self.mu * t + self.gain * beta).exp()
    }

    /// Deterministic skeleton with constant control g:
    /// y0 exp((mu + a g - a^2/2) t).
    pub fn skeleton_constant(&self, t: f64, g: f64) -> f64 {
        self.y0 * ((self.mu + self.gain * g - 0.5 * self.gain * self.gain) * t).exp()
    }
}

/// A fully assembled simulation model.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub space: Arc<GalerkinSpace>,
    pub drift: Arc<dyn DriftOperator>,
    pub noise: Arc<dyn NoiseOperator>,
    pub initial_state: CoefState,
    pub oracle: Option<GeometricOracle>,
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        space: Arc<GalerkinSpace>,
        drift: Arc<dyn DriftOperator>,
        noise: Arc<dyn NoiseOperator>,
        initial_state: CoefState,
    ) -> Result<Self> {
        if initial_state.dim() != space.n_modes {
            return Err(Error::Dimension {
                context: "ModelSpec initial state",
                expected: space.n_modes,
                got: initial_state.dim(),
            });
        }
        let beta = drift.constants().beta;
        if (beta - space.v_exponent).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "drift beta {beta} must match the space exponent {}",
                space.v_exponent
            )));
        }
        Ok(ModelSpec {
            name: name.into(),
            space,
            drift,
            noise,
            initial_state,
            oracle: None,
        })
    }

    pub fn with_oracle(mut self, oracle: GeometricOracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn beta(&self) -> f64 {
        self.drift.constants().beta
    }

    pub fn dim(&self) -> usize {
        self.space.n_modes
    }

    /// Swap the noise coefficient (same space, same drift).
    pub fn with_noise(mut self, noise: Arc<dyn NoiseOperator>) -> Self {
        self.noise = noise;
        self
    }
}

/// Default smooth initial profile c_k = k^{-2}.
pub(crate) fn default_profile(n: usize) -> Vec<f64> {
    (1..=n).map(|k| 1.0 / (k * k) as f64).collect()
}

pub(crate) fn initial_or_default(n: usize, initial: Option<Vec<f64>>) -> Result<CoefState> {
    match initial {
        Some(coeffs) => {
            if coeffs.len() != n {
                return Err(Error::Dimension {
                    context: "initial state",
                    expected: n,
                    got: coeffs.len(),
                });
            }
            CoefState::new(coeffs, 0.0)
        }
        None => CoefState::new(default_profile(n), 0.0),
    }
}
