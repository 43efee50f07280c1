//! p-Laplacian evolution: <A(y), z> = -int |y_x|^{p-2} y_x z_x dx.
//!
//! The V norm is the W^{1,p} seminorm evaluated on the quadrature grid, and
//! the drift representative is assembled from the same grid, so the identity
//! <A(y), y> = -|y|_V^p holds to roundoff and the coercivity constant 2 is
//! exact on the doubled-pairing scale. At p = 2 the operator coincides with
//! unit-viscosity linear diffusion, which the tests cross-check.

use super::{initial_or_default, ModelSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::operators::{DriftConstants, DriftOperator};
use crate::spaces::GalerkinSpace;
use std::f64::consts::PI;
use std::sync::Arc;

pub struct PLaplaceDrift {
    space: Arc<GalerkinSpace>,
    p: f64,
    growth: f64,
}

impl DriftOperator for PLaplaceDrift {
    fn eval_into(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        let derivs = self.space.derivs_on_grid(state);
        let flux: Vec<f64> = derivs
            .iter()
            .map(|&d| d.abs().powf(self.p - 2.0) * d)
            .collect();
        let proj = self.space.project_gradient_from_grid(&flux);
        for (o, g) in out.iter_mut().zip(&proj) {
            *o = -g;
        }
    }

    fn constants(&self) -> DriftConstants {
        DriftConstants {
            coercivity: 2.0,
            beta: self.p,
            alpha: 0.0,
            zeta: 0.0,
            growth: self.growth,
        }
    }
}

pub fn make_plaplace(n_modes: usize, length: f64, p: f64, noise: &NoiseSpec) -> Result<ModelSpec> {
    if p < 2.0 {
        return Err(Error::invalid(format!("p-Laplacian needs p >= 2, got {p}")));
    }
    if !p.is_finite() || p > 12.0 {
        return Err(Error::invalid("extreme p would underflow the quadrature"));
    }
    let space = Arc::new(GalerkinSpace::sine_dirichlet_gradient_p(n_modes, length, p)?);
    // dual-norm growth constant: |A(y)|_{V*} <= |grad y|_{L^{2(p-1)}}^{p-1}
    // interpolated against |y|_V with the finite-dimensional sup bound
    // |grad y|_inf <= kappa_n |y|_H and Poincare |y|_H <= c_P |y|_V.
    let kappa_n: f64 = (0..n_modes)
        .map(|k| {
            let omega = (k + 1) as f64 * PI / length;
            2.0 / length * omega * omega
        })
        .sum::<f64>()
        .sqrt();
    let c_p = length / PI * length.powf((p - 2.0) / (2.0 * p));
    let expo = (p - 2.0) * p / (2.0 * (p - 1.0));
    let growth = 1.25 * (kappa_n * c_p).powf(expo);
    let drift = Arc::new(PLaplaceDrift { space: space.clone(), p, growth });
    let noise_op = noise.build(&space)?;
    let initial = initial_or_default(n_modes, None)?;
    ModelSpec::new("plaplace", space, drift, noise_op, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_heat;
    use crate::rng;

    #[test]
    fn zero_state_gives_zero_drift() {
        let model = make_plaplace(6, 2.0, 3.0, &NoiseSpec::None).unwrap();
        let a = model.drift.eval(0.0, &vec![0.0; 6]);
        assert!(a.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pairing_reproduces_v_norm_power() {
        // <A(y), y> = -|y|_V^p by construction (same quadrature both sides)
        let p = 3.5;
        let model = make_plaplace(8, 2.0, p, &NoiseSpec::None).unwrap();
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..8).map(|k| rng::normal(5, k as u64, 0, trial)).collect();
            let a = model.drift.eval(0.0, &y);
            let lhs = model.space.dual_pairing(&a, &y);
            let rhs = -model.space.norm_v(&y).powf(p);
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn reduces_to_linear_diffusion_at_p_two() {
        let n = 8;
        let plap = make_plaplace(n, 2.0, 2.0, &NoiseSpec::None).unwrap();
        let heat = make_heat(n, 2.0, 1.0, &NoiseSpec::None).unwrap();
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..n).map(|k| rng::normal(6, k as u64, 0, trial)).collect();
            let a1 = plap.drift.eval(0.0, &y);
            let a2 = heat.drift.eval(0.0, &y);
            for (u, v) in a1.iter().zip(&a2) {
                assert!((u - v).abs() < 1e-8 * (1.0 + v.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn rejects_unusable_exponents() {
        assert!(make_plaplace(4, 1.0, 1.5, &NoiseSpec::None).is_err());
        assert!(make_plaplace(4, 1.0, 40.0, &NoiseSpec::None).is_err());
    }
}
