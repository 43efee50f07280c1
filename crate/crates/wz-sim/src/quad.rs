//! Quadrature tables for integral norms and pseudo-spectral products.
//!
//! Uniform nodes with trapezoid weights: on `[0, L]` this rule integrates
//! every trigonometric polynomial below the grid Nyquist frequency exactly,
//! which is what keeps the spectral transforms and the skew-symmetry and
//! integral identities accurate to roundoff. The node budget defaults to
//! 4 intervals per retained mode, which also dealiases cubic products.

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Trapezoid rule on `[0, length]` with `intervals` uniform panels
    /// (endpoints carry half weight).
    pub fn closed_uniform(length: f64, intervals: usize) -> Self {
        assert!(intervals >= 2, "need at least two panels");
        let h = length / intervals as f64;
        let nodes = (0..=intervals).map(|j| j as f64 * h).collect();
        let mut weights = vec![h; intervals + 1];
        weights[0] = 0.5 * h;
        weights[intervals] = 0.5 * h;
        Quadrature { nodes, weights }
    }

    /// Rectangle rule on `[0, length)` for periodic integrands.
    pub fn periodic_uniform(length: f64, intervals: usize) -> Self {
        assert!(intervals >= 2, "need at least two panels");
        let h = length / intervals as f64;
        let nodes = (0..intervals).map(|j| j as f64 * h).collect();
        let weights = vec![h; intervals];
        Quadrature { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum()
    }

    /// Integral of |f|^p from node values.
    pub fn integrate_abs_pow(&self, values: &[f64], p: f64) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum()
    }
}
