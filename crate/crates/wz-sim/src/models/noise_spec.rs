//! Shipped noise coefficient families.
//!
//! Three regimes: additive (state-independent, zero correction), diagonal
//! linear (the generic multiplicative case with closed-form correction), and
//! a bounded tanh map applied coefficient-wise (nonzero second derivative).
//! Every family declares the constants its hypothesis audits run against.

use crate::error::{Error, Result};
use crate::operators::{NoiseConstants, NoiseOperator, ZeroNoise};
use crate::spaces::GalerkinSpace;
use std::sync::Arc;

/// Config-level description of a noise coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    None,
    /// sigma_i(y) = amplitudes[i] * e_i with e_i the i-th basis vector.
    Additive { amplitudes: Vec<f64> },
    /// sigma_i(y) = gains[i] * y.
    DiagonalLinear { gains: Vec<f64> },
    /// sigma_i(y)_k = gains[i] * tanh(y_k).
    Tanh { gains: Vec<f64> },
}

impl NoiseSpec {
    pub fn build(&self, space: &GalerkinSpace) -> Result<Arc<dyn NoiseOperator>> {
        match self {
            NoiseSpec::None => Ok(Arc::new(ZeroNoise)),
            NoiseSpec::Additive { amplitudes } => {
                if amplitudes.len() > space.n_modes {
                    return Err(Error::invalid(format!(
                        "additive noise uses basis profiles: {} modes exceed space dimension {}",
                        amplitudes.len(),
                        space.n_modes
                    )));
                }
                Ok(Arc::new(AdditiveNoise::new(amplitudes.clone(), space)))
            }
            NoiseSpec::DiagonalLinear { gains } => Ok(Arc::new(DiagonalLinearNoise::new(gains.clone()))),
            NoiseSpec::Tanh { gains } => Ok(Arc::new(TanhNoise::new(gains.clone()))),
        }
    }

    pub fn mode_count(&self) -> usize {
        match self {
            NoiseSpec::None => 0,
            NoiseSpec::Additive { amplitudes } => amplitudes.len(),
            NoiseSpec::DiagonalLinear { gains } | NoiseSpec::Tanh { gains } => gains.len(),
        }
    }
}

/// sigma_i(y) = b_i e_i; constant in the state, so the correction vanishes.
pub struct AdditiveNoise {
    amplitudes: Vec<f64>,
    k_growth: f64,
}

impl AdditiveNoise {
    pub fn new(amplitudes: Vec<f64>, space: &GalerkinSpace) -> Self {
        let k_growth = amplitudes
            .iter()
            .enumerate()
            .map(|(i, b)| b * b * space.h_weights[i])
            .sum();
        AdditiveNoise { amplitudes, k_growth }
    }
}

impl NoiseOperator for AdditiveNoise {
    fn mode_count(&self) -> usize {
        self.amplitudes.len()
    }

    fn apply_mode_into(&self, _state: &[f64], mode: usize, out: &mut [f64]) {
        out.fill(0.0);
        out[mode] = self.amplitudes[mode];
    }

    fn derivative_into(&self, _state: &[f64], _mode: usize, _dir: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn second_derivative_into(&self, _s: &[f64], _m: usize, _d1: &[f64], _d2: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn constants(&self) -> NoiseConstants {
        NoiseConstants { k_growth: self.k_growth, l_correction: 0.0, c_kappa: 0.0 }
    }
}

/// sigma_i(y) = a_i y with correction (sum a_i^2) y.
pub struct DiagonalLinearNoise {
    gains: Vec<f64>,
    sum_sq: f64,
}

impl DiagonalLinearNoise {
    pub fn new(gains: Vec<f64>) -> Self {
        let sum_sq = gains.iter().map(|a| a * a).sum();
        DiagonalLinearNoise { gains, sum_sq }
    }
}

impl NoiseOperator for DiagonalLinearNoise {
    fn mode_count(&self) -> usize {
        self.gains.len()
    }

    fn apply_mode_into(&self, state: &[f64], mode: usize, out: &mut [f64]) {
        let a = self.gains[mode];
        for (o, s) in out.iter_mut().zip(state) {
            *o = a * s;
        }
    }

    fn derivative_into(&self, _state: &[f64], mode: usize, dir: &[f64], out: &mut [f64]) {
        let a = self.gains[mode];
        for (o, d) in out.iter_mut().zip(dir) {
            *o = a * d;
        }
    }

    fn second_derivative_into(&self, _s: &[f64], _m: usize, _d1: &[f64], _d2: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn constants(&self) -> NoiseConstants {
        NoiseConstants {
            k_growth: self.sum_sq,
            l_correction: self.sum_sq * self.sum_sq,
            c_kappa: self.sum_sq,
        }
    }

    fn kappa(&self, _state: &[f64]) -> f64 {
        0.5 * self.sum_sq
    }

    fn varkappa(&self, _state: &[f64]) -> f64 {
        0.5 * self.sum_sq
    }
}

/// Bounded smooth noise with nonzero second derivative:
/// sigma_i(y)_k = b_i tanh(y_k).
pub struct TanhNoise {
    gains: Vec<f64>,
    sum_sq: f64,
}

impl TanhNoise {
    pub fn new(gains: Vec<f64>) -> Self {
        let sum_sq = gains.iter().map(|b| b * b).sum();
        TanhNoise { gains, sum_sq }
    }
}

impl NoiseOperator for TanhNoise {
    fn mode_count(&self) -> usize {
        self.gains.len()
    }

    fn apply_mode_into(&self, state: &[f64], mode: usize, out: &mut [f64]) {
        let b = self.gains[mode];
        for (o, s) in out.iter_mut().zip(state) {
            *o = b * s.tanh();
        }
    }

    fn derivative_into(&self, state: &[f64], mode: usize, dir: &[f64], out: &mut [f64]) {
        let b = self.gains[mode];
        for ((o, s), d) in out.iter_mut().zip(state).zip(dir) {
            let sech2 = 1.0 - s.tanh() * s.tanh();
            *o = b * sech2 * d;
        }
    }

    fn second_derivative_into(&self, state: &[f64], mode: usize, d1: &[f64], d2: &[f64], out: &mut [f64]) {
        let b = self.gains[mode];
        for (((o, s), a), c) in out.iter_mut().zip(state).zip(d1).zip(d2) {
            let th = s.tanh();
            let sech2 = 1.0 - th * th;
            *o = -2.0 * b * th * sech2 * a * c;
        }
    }

    fn constants(&self) -> NoiseConstants {
        // |tanh x| <= |x| gives K = sum b^2; |sech^2 tanh| <= |x| gives the
        // same quadratic correction bound; the pairing Lipschitz constant of
        // the correction is at most sum b^2 (slope one at the origin).
        NoiseConstants {
            k_growth: self.sum_sq,
            l_correction: self.sum_sq * self.sum_sq,
            c_kappa: 1.2 * self.sum_sq,
        }
    }

    fn kappa(&self, _state: &[f64]) -> f64 {
        0.6 * self.sum_sq
    }

    fn varkappa(&self, _state: &[f64]) -> f64 {
        0.6 * self.sum_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::correction_term;
    use crate::rng;

    fn fd_check(noise: &dyn NoiseOperator, dim: usize, seed: u64) {
        // first derivative against central differences, second against the
        // second difference quotient, relative error <= 10 h at h = 1e-6
        let h = 1e-6;
        let tol = 10.0 * h;
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..dim).map(|k| rng::normal(seed, k as u64, 0, trial)).collect();
            let v: Vec<f64> = (0..dim).map(|k| rng::normal(seed, k as u64, 1, trial)).collect();
            let w: Vec<f64> = (0..dim).map(|k| rng::normal(seed, k as u64, 2, trial)).collect();
            for mode in 0..noise.mode_count() {
                let plus: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a + h * b).collect();
                let minus: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - h * b).collect();
                let sp = noise.apply_mode(&plus, mode);
                let sm = noise.apply_mode(&minus, mode);
                let mut deriv = vec![0.0; dim];
                noise.derivative_into(&y, mode, &v, &mut deriv);
                for k in 0..dim {
                    let fd = (sp[k] - sm[k]) / (2.0 * h);
                    let scale = 1.0 + fd.abs();
                    assert!((deriv[k] - fd).abs() <= tol * scale, "mode {mode} coeff {k}");
                }

                // second derivative: symmetric difference of first derivatives
                let mut dp = vec![0.0; dim];
                let mut dm = vec![0.0; dim];
                let plus_w: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a + h * b).collect();
                let minus_w: Vec<f64> = y.iter().zip(&w).map(|(a, b)| a - h * b).collect();
                noise.derivative_into(&plus_w, mode, &v, &mut dp);
                noise.derivative_into(&minus_w, mode, &v, &mut dm);
                let mut second = vec![0.0; dim];
                noise.second_derivative_into(&y, mode, &v, &w, &mut second);
                for k in 0..dim {
                    let fd = (dp[k] - dm[k]) / (2.0 * h);
                    let scale = 1.0 + fd.abs();
                    assert!((second[k] - fd).abs() <= tol * scale, "mode {mode} coeff {k} (second)");
                }
            }
        }
    }

    #[test]
    fn additive_derivatives_match_finite_differences() {
        let space = GalerkinSpace::sine_dirichlet(4, 1.0).unwrap();
        let noise = NoiseSpec::Additive { amplitudes: vec![0.5, 0.2] }.build(&space).unwrap();
        fd_check(noise.as_ref(), 4, 1);
        assert!(correction_term(noise.as_ref(), 2, &[1.0, 2.0, 3.0, 4.0])
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn diagonal_linear_derivatives_match_finite_differences() {
        let space = GalerkinSpace::sine_dirichlet(4, 1.0).unwrap();
        let noise = NoiseSpec::DiagonalLinear { gains: vec![0.4, 0.2, 0.1] }.build(&space).unwrap();
        fd_check(noise.as_ref(), 4, 2);
    }

    #[test]
    fn tanh_derivatives_match_finite_differences() {
        let space = GalerkinSpace::sine_dirichlet(5, 2.0).unwrap();
        let noise = NoiseSpec::Tanh { gains: vec![0.3, 0.15] }.build(&space).unwrap();
        fd_check(noise.as_ref(), 5, 3);
    }

    #[test]
    fn tanh_second_derivative_symmetric_and_nonzero() {
        let noise = TanhNoise::new(vec![0.5]);
        let y = vec![0.7, -0.3];
        let v = vec![1.0, 2.0];
        let w = vec![-0.5, 0.25];
        let mut vw = vec![0.0; 2];
        let mut wv = vec![0.0; 2];
        noise.second_derivative_into(&y, 0, &v, &w, &mut vw);
        noise.second_derivative_into(&y, 0, &w, &v, &mut wv);
        assert_eq!(vw, wv);
        assert!(vw.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn additive_rejects_more_modes_than_space() {
        let space = GalerkinSpace::sine_dirichlet(2, 1.0).unwrap();
        assert!(NoiseSpec::Additive { amplitudes: vec![0.1, 0.2, 0.3] }
            .build(&space)
            .is_err());
    }
}
