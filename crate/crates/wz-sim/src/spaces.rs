//! Finite-dimensional surrogate of the Gelfand triple `V c H c V*`.
//!
//! States are coefficient vectors over a spectral basis. The three norms are
//! weighted coefficient sums; non-quadratic `V` norms (p-type spaces) are
//! evaluated as integral norms on the quadrature grid. Drift operators hand
//! back the H-Riesz representative of their output, so the duality pairing
//! `<a, z>` is always the weighted coefficient sum `sum_k h_k a_k z_k`,
//! matching the convention that the pairing extends the H inner product.

use crate::error::{Error, Result};
use crate::quad::Quadrature;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Single coefficient, all weights one. Embeds scalar SDE sanity models.
    Scalar,
    /// sqrt(2/L) sin(k pi x / L) on (0, L), zero boundary values.
    SineDirichlet,
    /// Constant mode plus cos/sin pairs on the circle of length L.
    FourierPeriodic,
}

/// How the V norm is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VNormKind {
    /// Weighted coefficient two-norm with `v_weights`.
    Quadratic,
    /// L^p norm of the function values, by quadrature.
    LebesgueP(f64),
    /// L^p norm of the spatial derivative, by quadrature.
    GradientP(f64),
}

/// A state: coefficients in the space basis, tagged with its time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefState {
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl CoefState {
    pub fn new(coeffs: Vec<f64>, time: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficient state contains non-finite entries"));
        }
        Ok(CoefState { coeffs, time })
    }

    pub fn zeros(n: usize) -> Self {
        CoefState { coeffs: vec![0.0; n], time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinSpace {
    pub n_modes: usize,
    pub basis_kind: BasisKind,
    pub domain_length: f64,
    pub h_weights: Vec<f64>,
    pub v_weights: Vec<f64>,
    pub vstar_weights: Vec<f64>,
    /// Coercivity exponent beta attached to the V norm.
    pub v_exponent: f64,
    pub v_norm_kind: VNormKind,
    quadrature: Option<Quadrature>,
    /// basis_values[k][j] = phi_k(x_j)
    basis_values: Vec<Vec<f64>>,
    /// basis_derivs[k][j] = phi_k'(x_j)
    basis_derivs: Vec<Vec<f64>>,
}

/// Quadrature panels per retained mode; enough to dealias cubic products.
pub const QUAD_INTERVALS_PER_MODE: usize = 4;

impl GalerkinSpace {
    /// One-dimensional space with unit weights; V = H = V* = R.
    pub fn scalar() -> Self {
        GalerkinSpace {
            n_modes: 1,
            basis_kind: BasisKind::Scalar,
            domain_length: 1.0,
            h_weights: vec![1.0],
            v_weights: vec![1.0],
            vstar_weights: vec![1.0],
            v_exponent: 2.0,
            v_norm_kind: VNormKind::Quadratic,
            quadrature: None,
            basis_values: vec![vec![1.0]],
            basis_derivs: vec![vec![0.0]],
        }
    }

    /// L^2-based triple on (0, L): H = L^2, V the Dirichlet gradient norm.
    pub fn sine_dirichlet(n_modes: usize, length: f64) -> Result<Self> {
        Self::sine_core(n_modes, length, VNormKind::Quadratic, 2.0)
    }

    /// W^{1,p}-type V norm over the sine basis (p-Laplacian setting).
    pub fn sine_dirichlet_gradient_p(n_modes: usize, length: f64, p: f64) -> Result<Self> {
        if p < 2.0 {
            return Err(Error::invalid(format!("gradient-p space needs p >= 2, got {p}")));
        }
        Self::sine_core(n_modes, length, VNormKind::GradientP(p), p)
    }

    /// H^{-1}-weighted H over the sine basis with V = L^q (porous medium setting).
    pub fn sine_h_negative(n_modes: usize, length: f64, q: f64) -> Result<Self> {
        if q < 2.0 {
            return Err(Error::invalid(format!("Lebesgue-q space needs q >= 2, got {q}")));
        }
        let mut space = Self::sine_core(n_modes, length, VNormKind::LebesgueP(q), q)?;
        for k in 0..n_modes {
            let lam = ((k + 1) as f64 * PI / length).powi(2);
            space.h_weights[k] = 1.0 / lam;
            // quadratic proxy for the dual weights: V-side reference is L^2
            space.v_weights[k] = 1.0;
            space.vstar_weights[k] = space.h_weights[k] * space.h_weights[k];
        }
        Ok(space)
    }

    fn sine_core(n_modes: usize, length: f64, v_norm_kind: VNormKind, beta: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("n_modes must be positive"));
        }
        if !(length > 0.0) {
            return Err(Error::invalid("domain_length must be positive"));
        }
        let quad = Quadrature::closed_uniform(length, QUAD_INTERVALS_PER_MODE * n_modes);
        let norm = (2.0 / length).sqrt();
        let mut basis_values = Vec::with_capacity(n_modes);
        let mut basis_derivs = Vec::with_capacity(n_modes);
        let mut v_weights = Vec::with_capacity(n_modes);
        for k in 1..=n_modes {
            let omega = k as f64 * PI / length;
            basis_values.push(quad.nodes.iter().map(|&x| norm * (omega * x).sin()).collect());
            basis_derivs.push(quad.nodes.iter().map(|&x| norm * omega * (omega * x).cos()).collect());
            v_weights.push(omega * omega);
        }
        let h_weights = vec![1.0; n_modes];
        let vstar_weights = v_weights.iter().map(|v| 1.0 / v).collect();
        Ok(GalerkinSpace {
            n_modes,
            basis_kind: BasisKind::SineDirichlet,
            domain_length: length,
            h_weights,
            v_weights,
            vstar_weights,
            v_exponent: beta,
            v_norm_kind,
            quadrature: Some(quad),
            basis_values,
            basis_derivs,
        })
    }

    /// Real Fourier basis: mode 1 is the constant, then cos/sin pairs.
    pub fn fourier_periodic(n_modes: usize, length: f64) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("n_modes must be positive"));
        }
        if !(length > 0.0) {
            return Err(Error::invalid("domain_length must be positive"));
        }
        let quad = Quadrature::periodic_uniform(length, QUAD_INTERVALS_PER_MODE * n_modes);
        let c0 = (1.0 / length).sqrt();
        let cn = (2.0 / length).sqrt();
        let mut basis_values = Vec::with_capacity(n_modes);
        let mut basis_derivs = Vec::with_capacity(n_modes);
        let mut v_weights = Vec::with_capacity(n_modes);
        let mut h_weights = Vec::with_capacity(n_modes);
        for k in 0..n_modes {
            if k == 0 {
                basis_values.push(vec![c0; quad.len()]);
                basis_derivs.push(vec![0.0; quad.len()]);
                // constant mode carries no gradient; keep V comparable to H
                v_weights.push(1.0);
            } else {
                let freq = ((k + 1) / 2) as f64;
                let omega = 2.0 * freq * PI / length;
                if k % 2 == 1 {
                    basis_values.push(quad.nodes.iter().map(|&x| cn * (omega * x).cos()).collect());
                    basis_derivs.push(quad.nodes.iter().map(|&x| -cn * omega * (omega * x).sin()).collect());
                } else {
                    basis_values.push(quad.nodes.iter().map(|&x| cn * (omega * x).sin()).collect());
                    basis_derivs.push(quad.nodes.iter().map(|&x| cn * omega * (omega * x).cos()).collect());
                }
                v_weights.push(1.0 + omega * omega);
            }
            h_weights.push(1.0);
        }
        let vstar_weights = v_weights.iter().map(|v| 1.0 / v).collect();
        Ok(GalerkinSpace {
            n_modes,
            basis_kind: BasisKind::FourierPeriodic,
            domain_length: length,
            h_weights,
            v_weights,
            vstar_weights,
            v_exponent: 2.0,
            v_norm_kind: VNormKind::Quadratic,
            quadrature: Some(quad),
            basis_values,
            basis_derivs,
        })
    }

    pub fn quadrature(&self) -> Option<&Quadrature> {
        self.quadrature.as_ref()
    }

    fn check_dim(&self, x: &[f64], context: &'static str) -> Result<()> {
        if x.len() != self.n_modes {
            return Err(Error::Dimension {
                context,
                expected: self.n_modes,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm_h(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_modes);
        self.h_weights
            .iter()
            .zip(x)
            .map(|(w, c)| w * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_h_checked(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x, "norm_h")?;
        Ok(self.norm_h(x))
    }

    pub fn norm_v(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_modes);
        match self.v_norm_kind {
            VNormKind::Quadratic => self
                .v_weights
                .iter()
                .zip(x)
                .map(|(w, c)| w * c * c)
                .sum::<f64>()
                .sqrt(),
            VNormKind::LebesgueP(p) => {
                let vals = self.values_on_grid(x);
                self.quadrature
                    .as_ref()
                    .expect("integral norm needs quadrature")
                    .integrate_abs_pow(&vals, p)
                    .powf(1.0 / p)
            }
            VNormKind::GradientP(p) => {
                let vals = self.derivs_on_grid(x);
                self.quadrature
                    .as_ref()
                    .expect("integral norm needs quadrature")
                    .integrate_abs_pow(&vals, p)
                    .powf(1.0 / p)
            }
        }
    }

    pub fn norm_v_checked(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x, "norm_v")?;
        Ok(self.norm_v(x))
    }

    /// Dual norm of an H-Riesz representative.
    pub fn norm_vstar(&self, a: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.n_modes);
        self.vstar_weights
            .iter()
            .zip(a)
            .map(|(vs, c)| vs * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_vstar_checked(&self, a: &[f64]) -> Result<f64> {
        self.check_dim(a, "norm_vstar")?;
        Ok(self.norm_vstar(a))
    }

    /// H inner product.
    pub fn inner_h(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_modes);
        debug_assert_eq!(y.len(), self.n_modes);
        self.h_weights
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// Duality pairing of an H-Riesz representative `a` against a state `z`;
    /// coincides with the H inner product whenever both are defined.
    pub fn dual_pairing(&self, a: &[f64], z: &[f64]) -> f64 {
        self.inner_h(a, z)
    }

    /// Point values of the state on the quadrature grid.
    pub fn values_on_grid(&self, x: &[f64]) -> Vec<f64> {
        let q = self.quadrature.as_ref().expect("grid evaluation needs quadrature");
        let mut out = vec![0.0; q.len()];
        for (k, &c) in x.iter().enumerate() {
            if c != 0.0 {
                for (o, b) in out.iter_mut().zip(&self.basis_values[k]) {
                    *o += c * b;
                }
            }
        }
        out
    }

    /// Point values of the spatial derivative on the quadrature grid.
    pub fn derivs_on_grid(&self, x: &[f64]) -> Vec<f64> {
        let q = self.quadrature.as_ref().expect("grid evaluation needs quadrature");
        let mut out = vec![0.0; q.len()];
        for (k, &c) in x.iter().enumerate() {
            if c != 0.0 {
                for (o, b) in out.iter_mut().zip(&self.basis_derivs[k]) {
                    *o += c * b;
                }
            }
        }
        out
    }

    /// L^2 projection of grid values onto the retained modes.
    pub fn project_from_grid(&self, values: &[f64]) -> Vec<f64> {
        let q = self.quadrature.as_ref().expect("projection needs quadrature");
        debug_assert_eq!(values.len(), q.len());
        (0..self.n_modes)
            .map(|k| {
                q.weights
                    .iter()
                    .zip(values.iter().zip(&self.basis_values[k]))
                    .map(|(w, (v, b))| w * v * b)
                    .sum()
            })
            .collect()
    }

    /// Same as `project_from_grid` but against the derivative of each basis
    /// function; used for weak-form drifts like the p-Laplacian.
    pub fn project_gradient_from_grid(&self, values: &[f64]) -> Vec<f64> {
        let q = self.quadrature.as_ref().expect("projection needs quadrature");
        debug_assert_eq!(values.len(), q.len());
        (0..self.n_modes)
            .map(|k| {
                q.weights
                    .iter()
                    .zip(values.iter().zip(&self.basis_derivs[k]))
                    .map(|(w, (v, b))| w * v * b)
                    .sum()
            })
            .collect()
    }
}

/// Spectral truncation onto the first `n` state modes.
pub fn project_state(x: &CoefState, n: usize) -> Result<CoefState> {
    if n == 0 || n > x.coeffs.len() {
        return Err(Error::Dimension {
            context: "project_state",
            expected: x.coeffs.len(),
            got: n,
        });
    }
    Ok(CoefState {
        coeffs: x.coeffs[..n].to_vec(),
        time: x.time,
    })
}

/// Truncation of a noise coordinate vector onto its first `m` modes.
pub fn project_noise(u: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > u.len() {
        return Err(Error::Dimension {
            context: "project_noise",
            expected: u.len(),
            got: m,
        });
    }
    Ok(u[..m].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn random_state(space: &GalerkinSpace, seed: u64, idx: u64) -> Vec<f64> {
        (0..space.n_modes)
            .map(|k| rng::normal(seed, 77, k as u64, idx))
            .collect()
    }

    #[test]
    fn project_state_truncates() {
        let x = CoefState::new(vec![1.0, 2.0, 3.0], 0.0).unwrap();
        assert_eq!(project_state(&x, 2).unwrap().coeffs, vec![1.0, 2.0]);
        assert_eq!(project_state(&x, 3).unwrap().coeffs, vec![1.0, 2.0, 3.0]);
        assert!(project_state(&x, 4).is_err());
        assert!(project_state(&x, 0).is_err());
    }

    #[test]
    fn projected_h_norm_pythagoras() {
        let space = GalerkinSpace::sine_dirichlet(3, 1.0).unwrap();
        let x = CoefState::new(vec![3.0, 4.0, 12.0], 0.0).unwrap();
        let p2 = project_state(&x, 2).unwrap();
        let space2 = GalerkinSpace::sine_dirichlet(2, 1.0).unwrap();
        assert!((space2.norm_h(&p2.coeffs) - 5.0).abs() < 1e-14);
        assert!(space2.norm_h(&p2.coeffs) <= space.norm_h(&x.coeffs));
    }

    #[test]
    fn project_noise_truncates_and_idempotent() {
        let u = vec![0.5, -0.5, 1.0];
        assert_eq!(project_noise(&u, 1).unwrap(), vec![0.5]);
        assert_eq!(project_noise(&u, 3).unwrap(), u);
        let once = project_noise(&u, 2).unwrap();
        let twice = project_noise(&once, 2).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let space = GalerkinSpace::sine_dirichlet(5, 2.0).unwrap();
        let z = vec![0.0; 5];
        assert_eq!(space.norm_h(&z), 0.0);
        assert_eq!(space.norm_v(&z), 0.0);
        assert_eq!(space.norm_vstar(&z), 0.0);
    }

    #[test]
    fn unit_mode_v_to_h_ratio_is_k_pi_over_l() {
        // hand evaluation: the gradient of sin(k pi x / L) scales by k pi / L,
        // confirmed both through the weight table and by grid quadrature
        let l = 2.0;
        let space = GalerkinSpace::sine_dirichlet(6, l).unwrap();
        for k in 1..=6 {
            let mut e = vec![0.0; 6];
            e[k - 1] = 1.0;
            let ratio = space.norm_v(&e) / space.norm_h(&e);
            let expect = k as f64 * PI / l;
            assert!((ratio - expect).abs() < 1e-12);

            let grid_deriv = space.derivs_on_grid(&e);
            let grid_norm = space
                .quadrature()
                .unwrap()
                .integrate_abs_pow(&grid_deriv, 2.0)
                .sqrt();
            assert!((grid_norm - expect).abs() < 1e-10, "k={k}: {grid_norm} vs {expect}");
        }
    }

    #[test]
    fn duality_interpolation_on_basis_elements() {
        // |x|_H^2 <= |x|_V |x|_Vstar, equality on basis elements
        let space = GalerkinSpace::sine_dirichlet(8, 1.5).unwrap();
        for k in 0..8 {
            let mut e = vec![0.0; 8];
            e[k] = 1.3;
            let h2 = space.norm_h(&e).powi(2);
            let bound = space.norm_v(&e) * space.norm_vstar(&e);
            assert!((h2 - bound).abs() < 1e-12);
        }
        for i in 0..50 {
            let x = random_state(&space, 5, i);
            let h2 = space.norm_h(&x).powi(2);
            assert!(h2 <= space.norm_v(&x) * space.norm_vstar(&x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pairing_matches_h_inner_product() {
        let space = GalerkinSpace::sine_h_negative(6, 2.0, 3.0).unwrap();
        for i in 0..20 {
            let x = random_state(&space, 11, 2 * i);
            let y = random_state(&space, 11, 2 * i + 1);
            assert!((space.dual_pairing(&x, &y) - space.inner_h(&x, &y)).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_self_adjoint_in_h() {
        let space = GalerkinSpace::sine_dirichlet(6, 1.0).unwrap();
        for i in 0..20 {
            let x = random_state(&space, 13, 2 * i);
            let y = random_state(&space, 13, 2 * i + 1);
            let n = 4;
            let mut px = x.clone();
            let mut py = y.clone();
            for k in n..6 {
                px[k] = 0.0;
                py[k] = 0.0;
            }
            let lhs = space.inner_h(&px, &y);
            let rhs = space.inner_h(&x, &py);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_roundtrip_is_identity() {
        let space = GalerkinSpace::sine_dirichlet(10, 2.0).unwrap();
        let x = random_state(&space, 17, 0);
        let back = space.project_from_grid(&space.values_on_grid(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn fourier_space_constructs_and_norms_behave() {
        let space = GalerkinSpace::fourier_periodic(5, 1.0).unwrap();
        let x = random_state(&space, 23, 0);
        assert!(space.norm_v(&x) >= space.norm_h(&x) - 1e-12);
        let back = space.project_from_grid(&space.values_on_grid(&x));
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let space = GalerkinSpace::sine_dirichlet(4, 1.0).unwrap();
        assert!(space.norm_h_checked(&[1.0, 2.0]).is_err());
        assert!(space.norm_v_checked(&[1.0; 5]).is_err());
    }

    proptest! {
        #[test]
        fn norms_absolutely_homogeneous(lambda in -5.0f64..5.0, seed in 0u64..500) {
            let space = GalerkinSpace::sine_h_negative(5, 2.0, 3.0).unwrap();
            let x = random_state(&space, seed, 0);
            let scaled: Vec<f64> = x.iter().map(|c| lambda * c).collect();
            let tol = 1e-9 * (1.0 + space.norm_v(&x));
            prop_assert!((space.norm_h(&scaled) - lambda.abs() * space.norm_h(&x)).abs() < tol);
            prop_assert!((space.norm_v(&scaled) - lambda.abs() * space.norm_v(&x)).abs() < tol);
            prop_assert!((space.norm_vstar(&scaled) - lambda.abs() * space.norm_vstar(&x)).abs() < tol);
        }

        #[test]
        fn triangle_inequality_holds(seed in 0u64..1000) {
            let space = GalerkinSpace::sine_dirichlet(6, 1.5).unwrap();
            let x = random_state(&space, seed, 0);
            let y = random_state(&space, seed, 1);
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let slack = 1e-12;
            prop_assert!(space.norm_h(&sum) <= space.norm_h(&x) + space.norm_h(&y) + slack);
            prop_assert!(space.norm_v(&sum) <= space.norm_v(&x) + space.norm_v(&y) + slack);
            prop_assert!(space.norm_vstar(&sum) <= space.norm_vstar(&x) + space.norm_vstar(&y) + slack);
        }

        #[test]
        fn state_projection_idempotent_and_nonexpansive(seed in 0u64..1000, n in 1usize..6) {
            let space = GalerkinSpace::sine_dirichlet(6, 1.0).unwrap();
            let coeffs = random_state(&space, seed, 3);
            let x = CoefState::new(coeffs, 0.0).unwrap();
            let pn = project_state(&x, n).unwrap();
            let pn2 = project_state(&pn, n).unwrap();
            prop_assert_eq!(pn.coeffs.clone(), pn2.coeffs);
            let small = GalerkinSpace::sine_dirichlet(n, 1.0).unwrap();
            prop_assert!(small.norm_h(&pn.coeffs) <= space.norm_h(&x.coeffs) + 1e-12);
        }
    }
}
