//! Viscous Burgers drift nu u_xx - u u_x on the sine basis.
//!
//! The convection term is evaluated pseudo-spectrally: transform to the
//! quadrature grid, multiply pointwise, project back. The grid carries four
//! panels per retained mode, so quadratic and cubic products are integrated
//! exactly and the projection is alias-free (zero-padded transform); the
//! skew-symmetry identity <u u_x, u> = 0 then holds to roundoff.
//!
//! Local monotonicity needs state-dependent functionals here. We declare
//!
//! ```text
//! rho(y) = eta(y) = c_rho (1 + |y|_{L^4}^4),
//! c_rho = 1.25 * (3/8) * 2^{7/3} * (16 nu / 5)^{-5/3},
//! ```
//!
//! obtained from the interpolation bound |u|_{L^4}^4 <= 2 |u|_H^3 |u|_V and
//! Young's inequality with exponents (8/5, 8/3), leaving the full 2 nu of
//! dissipation to the gradient term; the 1.25 factor is audit headroom.

use super::{initial_or_default, ModelSpec, NoiseSpec};
use crate::error::{Error, Result};
use crate::operators::{DriftConstants, DriftOperator};
use crate::spaces::GalerkinSpace;
use std::f64::consts::PI;
use std::sync::Arc;

pub struct BurgersDrift {
    space: Arc<GalerkinSpace>,
    nu: f64,
    c_rho: f64,
    growth: f64,
}

impl BurgersDrift {
    fn local_functional(&self, state: &[f64]) -> f64 {
        let vals = self.space.values_on_grid(state);
        let l4 = self
            .space
            .quadrature()
            .expect("sine space carries a grid")
            .integrate_abs_pow(&vals, 4.0);
        self.c_rho * (1.0 + l4)
    }

    /// Dealiased image of u u_x in coefficients.
    pub fn convection(&self, state: &[f64]) -> Vec<f64> {
        let vals = self.space.values_on_grid(state);
        let derivs = self.space.derivs_on_grid(state);
        let prod: Vec<f64> = vals.iter().zip(&derivs).map(|(v, d)| v * d).collect();
        self.space.project_from_grid(&prod)
    }
}

impl DriftOperator for BurgersDrift {
    fn eval_into(&self, _t: f64, state: &[f64], out: &mut [f64]) {
        let conv = self.convection(state);
        for (((o, s), lam), c) in out
            .iter_mut()
            .zip(state)
            .zip(&self.space.v_weights)
            .zip(&conv)
        {
            *o = -self.nu * lam * s - c;
        }
    }

    fn constants(&self) -> DriftConstants {
        DriftConstants {
            coercivity: 2.0 * self.nu,
            beta: 2.0,
            alpha: 3.0,
            zeta: 3.0,
            growth: self.growth,
        }
    }

    fn rho(&self, state: &[f64]) -> f64 {
        self.local_functional(state)
    }

    fn eta(&self, state: &[f64]) -> f64 {
        self.local_functional(state)
    }
}

pub fn make_burgers(n_modes: usize, length: f64, nu: f64, noise: &NoiseSpec) -> Result<ModelSpec> {
    make_burgers_with_initial(n_modes, length, nu, noise, None)
}

pub fn make_burgers_with_initial(
    n_modes: usize,
    length: f64,
    nu: f64,
    noise: &NoiseSpec,
    initial: Option<Vec<f64>>,
) -> Result<ModelSpec> {
    if !(nu > 0.0) {
        return Err(Error::invalid("viscosity nu must be positive"));
    }
    if n_modes < 4 {
        return Err(Error::invalid("Burgers needs at least 4 modes"));
    }
    let space = Arc::new(GalerkinSpace::sine_dirichlet(n_modes, length)?);
    let c_rho = 1.25 * (3.0 / 8.0) * 2f64.powf(7.0 / 3.0) * (16.0 * nu / 5.0).powf(-5.0 / 3.0);
    let growth = (6.0 * c_rho).max(2.0 * nu * nu + length / PI) * 1.25;
    let drift = Arc::new(BurgersDrift { space: space.clone(), nu, c_rho, growth });
    let noise_op = noise.build(&space)?;
    let initial = match initial {
        Some(v) => initial_or_default(n_modes, Some(v))?,
        None => {
            // single low mode; the classic steepening profile
            let mut c = vec![0.0; n_modes];
            c[0] = 1.0;
            initial_or_default(n_modes, Some(c))?
        }
    };
    ModelSpec::new("burgers", space, drift, noise_op, initial)
}
