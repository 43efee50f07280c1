//! Porous-medium evolution in the H^{-1}-weighted triple.
//!
//! H carries weights (k pi / L)^{-2} over the sine coefficients, V is L^{r+1}
//! by quadrature, and the drift's H-Riesz representative is the spectral
//! image of Laplacian(|y|^{r-1} y), so the duality pairing collapses to
//! <A(y), z> = -int |y|^{r-1} y z dx. In particular <A(y), y> = -|y|_V^{r+1}
//! exactly on the shared grid. At r = 1 the representative equals the
//! unit-diffusivity linear drift, cross-checked against the heat model.

use super::{initial_or_default, ModelSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::operators::{DriftConstants, DriftOperator};
use crate::spaces::GalerkinSpace;
use std::f64::consts::PI;
use std::sync::Arc;

pub struct PorousDrift {
    space: Arc<GalerkinSpace>,
    r: f64,
    /// (k pi / L)^2 multipliers.
    lambdas: Vec<f64>,
    growth: f64,
}

impl DriftOperator for PorousDrift {
    fn eval_into(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        let vals = self.space.values_on_grid(state);
        let powed: Vec<f64> = vals.iter().map(|&v| v.abs().powf(self.r - 1.0) * v).collect();
        let proj = self.space.project_from_grid(&powed);
        for ((o, b), lam) in out.iter_mut().zip(&proj).zip(&self.lambdas) {
            *o = -lam * b;
        }
    }

    fn constants(&self) -> DriftConstants {
        DriftConstants {
            coercivity: 2.0,
            beta: self.r + 1.0,
            alpha: 0.0,
            zeta: 0.0,
            growth: self.growth,
        }
    }
}

pub fn make_porous_media(n_modes: usize, length: f64, r: f64, noise: &NoiseSpec) -> Result<ModelSpec> {
    if r < 1.0 {
        return Err(Error::invalid(format!("porous medium exponent needs r >= 1, got {r}")));
    }
    if !r.is_finite() || r > 11.0 {
        return Err(Error::invalid("extreme r would underflow the quadrature"));
    }
    let space = Arc::new(GalerkinSpace::sine_h_negative(n_modes, length, r + 1.0)?);
    let lambdas: Vec<f64> = (0..n_modes)
        .map(|k| ((k + 1) as f64 * PI / length).powi(2))
        .collect();
    // |A(y)|_{V*}^{(r+1)/r} <= C |y|_V^{r+1} with the finite-dimensional
    // sup bound |y|_inf <= mu_n |y|_V folded into C.
    let mu_n = (2.0 * n_modes as f64 / length).sqrt()
        * length.powf((r - 1.0) / (2.0 * (r + 1.0)));
    let growth = 1.25 * mu_n.powf((r - 1.0) * (r + 1.0) / (2.0 * r));
    let drift = Arc::new(PorousDrift { space: space.clone(), r, lambdas, growth });
    let noise_op = noise.build(&space)?;
    let initial = initial_or_default(n_modes, None)?;
    ModelSpec::new("porous", space, drift, noise_op, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_heat;
    use crate::rng;

    #[test]
    fn zero_state_gives_zero_drift() {
        let model = make_porous_media(6, 2.0, 3.0, &NoiseSpec::None).unwrap();
        let a = model.drift.eval(0.0, &vec![0.0; 6]);
        assert!(a.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pairing_is_negative_lebesgue_power() {
        let r = 3.0;
        let model = make_porous_media(8, 2.0, r, &NoiseSpec::None).unwrap();
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..8).map(|k| rng::normal(8, k as u64, 0, trial)).collect();
            let a = model.drift.eval(0.0, &y);
            let lhs = model.space.dual_pairing(&a, &y);
            let rhs = -model.space.norm_v(&y).powf(r + 1.0);
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
            assert!(lhs <= 1e-12, "dissipation sign violated: {lhs}");
        }
    }

    #[test]
    fn reduces_to_heat_representative_at_r_one() {
        let n = 8;
        let porous = make_porous_media(n, 2.0, 1.0, &NoiseSpec::None).unwrap();
        let heat = make_heat(n, 2.0, 1.0, &NoiseSpec::None).unwrap();
        for trial in 0..20u64 {
            let y: Vec<f64> = (0..n).map(|k| rng::normal(9, k as u64, 0, trial)).collect();
            let a1 = porous.drift.eval(0.0, &y);
            let a2 = heat.drift.eval(0.0, &y);
            for (u, v) in a1.iter().zip(&a2) {
                assert!((u - v).abs() < 1e-8 * (1.0 + v.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn rejects_unusable_exponents() {
        assert!(make_porous_media(4, 1.0, 0.5, &NoiseSpec::None).is_err());
        assert!(make_porous_media(4, 1.0, 30.0, &NoiseSpec::None).is_err());
    }
}
