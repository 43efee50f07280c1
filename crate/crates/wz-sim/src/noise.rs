//! Dyadically refinable Brownian paths and their piecewise-constant
//! derivative drivers.
//!
//! Paths are built by Levy midpoint refinement so that one stored sample
//! serves every dyadic level at once: the restriction of the finest grid to a
//! coarser level is exactly the coarser sample of the same realization. All
//! randomness is counter-based, keyed by `(seed, mode, level, index)`.
//!
//! The driver evaluates, for level m with step `varpi = T / 2^m`, the
//! backward-difference quotient
//!
//! ```text
//! dbeta_i(t) = [ beta_i(floor(t/varpi) varpi) - beta_i((floor(t/varpi)-1) varpi) ] / varpi
//! ```
//!
//! with `beta_i(s) = 0` for `s <= 0` and `beta_i(s) = beta_i(T)` for `s >= T`,
//! so the driver never reads path values past the current floor grid point.

use crate::error::{Error, Result};
use crate::rng;
use std::io::Write;
use std::sync::{Arc, Mutex};

/// Instrumentation record: which stored value a solver read.
pub type ReadLog = Arc<Mutex<Vec<ReadRecord>>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadRecord {
    pub mode: usize,
    pub fine_index: usize,
    pub value_bits: u64,
}

#[derive(Debug, Clone)]
pub struct BrownianPath {
    pub t_horizon: f64,
    pub max_level: u32,
    pub n_noise_modes: usize,
    pub seed: u64,
    /// values[mode][k] = beta_mode(k * T / 2^max_level)
    values: Vec<Vec<f64>>,
    /// Optional read instrumentation for coupling-discipline tests.
    read_log: Option<ReadLog>,
}

/// Samples `n_noise_modes` independent scalar Brownian motions on
/// `[0, t_horizon]` at dyadic resolution `2^max_level`.
///
/// Level 0 draws the endpoint; each finer level fills interval midpoints with
/// bridge-conditional Gaussians. Identical `(seed, mode, level, index)` keys
/// always produce bit-identical values.
pub fn sample_path(seed: u64, t_horizon: f64, max_level: u32, n_noise_modes: usize) -> Result<BrownianPath> {
    if !(t_horizon > 0.0) {
        return Err(Error::invalid("t_horizon must be positive"));
    }
    if max_level < 1 || max_level > 26 {
        return Err(Error::invalid(format!("max_level must be in 1..=26, got {max_level}")));
    }
    if n_noise_modes == 0 {
        return Err(Error::invalid("n_noise_modes must be positive"));
    }
    let n_fine = 1usize << max_level;
    let mut values = Vec::with_capacity(n_noise_modes);
    for mode in 0..n_noise_modes {
        let mut beta = vec![0.0; n_fine + 1];
        beta[n_fine] = t_horizon.sqrt() * rng::normal(seed, mode as u64, 0, 0);
        for level in 1..=max_level {
            let stride = 1usize << (max_level - level);
            let half_step_var = t_horizon / (1u64 << (level + 1)) as f64;
            let noise_scale = half_step_var.sqrt();
            for k in 0..(1usize << (level - 1)) {
                let mid = (2 * k + 1) * stride;
                let left = beta[mid - stride];
                let right = beta[mid + stride];
                beta[mid] = 0.5 * (left + right)
                    + noise_scale * rng::normal(seed, mode as u64, level as u64, k as u64);
            }
        }
        values.push(beta);
    }
    Ok(BrownianPath {
        t_horizon,
        max_level,
        n_noise_modes,
        seed,
        values,
        read_log: None,
    })
}

impl BrownianPath {
    /// Builds a path from explicit grid values (testing / replay).
    pub fn from_values(t_horizon: f64, max_level: u32, values: Vec<Vec<f64>>) -> Result<Self> {
        let n_fine = 1usize << max_level;
        if values.is_empty() {
            return Err(Error::invalid("need at least one mode"));
        }
        for v in &values {
            if v.len() != n_fine + 1 {
                return Err(Error::Dimension {
                    context: "BrownianPath::from_values",
                    expected: n_fine + 1,
                    got: v.len(),
                });
            }
            if v[0] != 0.0 {
                return Err(Error::invalid("Brownian values must start at 0"));
            }
        }
        Ok(BrownianPath {
            t_horizon,
            max_level,
            n_noise_modes: values.len(),
            seed: 0,
            values,
            read_log: None,
        })
    }

    /// Attaches a log that records every stored value read through the
    /// accessors; used to assert that solvers sharing a path actually read
    /// identical Brownian values instead of resampling.
    pub fn attach_read_log(&mut self) -> ReadLog {
        let log: ReadLog = Arc::new(Mutex::new(Vec::new()));
        self.read_log = Some(log.clone());
        log
    }

    /// Value at fine-grid index `k`, i.e. `beta_mode(k T / 2^max_level)`.
    pub fn value_fine(&self, mode: usize, k: usize) -> f64 {
        let v = self.values[mode][k];
        if let Some(log) = &self.read_log {
            log.lock().unwrap().push(ReadRecord { mode, fine_index: k, value_bits: v.to_bits() });
        }
        v
    }

    /// Value at index `k` of the level-`level` grid.
    pub fn value_at_level(&self, mode: usize, level: u32, k: usize) -> f64 {
        debug_assert!(level <= self.max_level);
        let stride = 1usize << (self.max_level - level);
        self.value_fine(mode, k * stride)
    }

    /// Increment over the `step`-th interval of the level-`level` grid.
    pub fn increment_at_level(&self, mode: usize, level: u32, step: usize) -> f64 {
        self.value_at_level(mode, level, step + 1) - self.value_at_level(mode, level, step)
    }

    pub fn grid_time(&self, level: u32, k: usize) -> f64 {
        self.t_horizon * k as f64 / (1u64 << level) as f64
    }

    /// Restriction to a coarser dyadic level as a standalone path.
    pub fn subsample(&self, level: u32) -> Result<BrownianPath> {
        if level < 1 || level > self.max_level {
            return Err(Error::invalid(format!(
                "subsample level must be in 1..={}, got {level}",
                self.max_level
            )));
        }
        let n_coarse = 1usize << level;
        let values = (0..self.n_noise_modes)
            .map(|mode| {
                (0..=n_coarse)
                    .map(|k| self.value_at_level(mode, level, k))
                    .collect()
            })
            .collect();
        BrownianPath::from_values(self.t_horizon, level, values)
    }

    /// CSV dump at the finest level: `mode,k,t_k,beta_value`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "mode,k,t_k,beta_value")?;
        let n_fine = 1usize << self.max_level;
        for (mode, values) in self.values.iter().enumerate() {
            for k in 0..=n_fine {
                writeln!(w, "{},{},{},{}", mode + 1, k, self.grid_time(self.max_level, k), values[k])?;
            }
        }
        Ok(())
    }
}

/// Evaluates the level-`m` piecewise-constant derivative of a shared path.
#[derive(Debug, Clone, Copy)]
pub struct WzDriver<'a> {
    path: &'a BrownianPath,
    pub level: u32,
    pub varpi: f64,
}

impl<'a> WzDriver<'a> {
    pub fn new(path: &'a BrownianPath, level: u32) -> Result<Self> {
        if level < 1 || level > path.max_level {
            return Err(Error::invalid(format!(
                "driver level must be in 1..={}, got {level}",
                path.max_level
            )));
        }
        let varpi = path.t_horizon / (1u64 << level) as f64;
        Ok(WzDriver { path, level, varpi })
    }

    /// Number of noise modes actually driven: `min(m, n_noise_modes)`.
    /// When m exceeds the stored mode count the sum is silently capped.
    pub fn active_modes(&self) -> usize {
        (self.level as usize).min(self.path.n_noise_modes)
    }

    pub fn intervals(&self) -> usize {
        1usize << self.level
    }

    fn interval_of(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.path.t_horizon).contains(&t) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.path.t_horizon
            )));
        }
        Ok(((t / self.varpi).floor() as usize).min(self.intervals()))
    }

    /// Derivative value on the interval `[k varpi, (k+1) varpi)`; the index
    /// convention extends past the horizon by holding the final increment.
    pub fn derivative_on_interval(&self, k: usize, mode: usize) -> f64 {
        if mode >= self.active_modes() {
            return 0.0;
        }
        if k == 0 {
            return 0.0; // beta(0) - beta(-varpi) = 0 by the extension convention
        }
        let k_cap = k.min(self.intervals());
        let cur = self.path.value_at_level(mode, self.level, k_cap);
        let prev = self.path.value_at_level(mode, self.level, k_cap - 1);
        (cur - prev) / self.varpi
    }

    /// `dbeta_mode(t)` per the backward-difference definition.
    pub fn derivative(&self, t: f64, mode: usize) -> Result<f64> {
        if mode >= self.path.n_noise_modes {
            return Err(Error::Dimension {
                context: "WzDriver::derivative mode",
                expected: self.path.n_noise_modes,
                got: mode,
            });
        }
        let k = self.interval_of(t)?;
        Ok(self.derivative_on_interval(k, mode))
    }

    /// The driving vector at time `t`, zero-padded to `n_noise_modes`.
    pub fn vector(&self, t: f64) -> Result<Vec<f64>> {
        let k = self.interval_of(t)?;
        Ok(self.vector_on_interval(k))
    }

    pub fn vector_on_interval(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.path.n_noise_modes];
        for mode in 0..self.active_modes() {
            out[mode] = self.derivative_on_interval(k, mode);
        }
        out
    }
}

/// Per-level Monte-Carlo estimates of the large-deviation tail events for the
/// smoothed noise: the per-mode sup event with threshold
/// `delta sqrt(m) 2^{m/2}` and the vector-norm sup event with threshold
/// `delta m 2^{m/2}`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TailEstimate {
    pub m: u32,
    pub p_mode_sup: f64,
    pub p_vector_sup: f64,
    pub n_samples: usize,
}

pub fn tail_probability_estimate(
    t_horizon: f64,
    m_levels: &[u32],
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if m_levels.is_empty() {
        return Err(Error::invalid("m_levels must be nonempty"));
    }
    if n_samples < 100 {
        return Err(Error::invalid("n_samples must be at least 100"));
    }
    let mut out = Vec::with_capacity(m_levels.len());
    for &m in m_levels {
        let thr_mode = delta * (m as f64).sqrt() * 2f64.powf(m as f64 / 2.0);
        let thr_vec = delta * m as f64 * 2f64.powf(m as f64 / 2.0);
        let mut hits_mode = 0usize;
        let mut hits_vec = 0usize;
        for sample in 0..n_samples {
            let path_seed = rng::derive_seed(seed ^ (m as u64) << 32, sample as u64);
            let path = sample_path(path_seed, t_horizon, m, m as usize)?;
            let driver = WzDriver::new(&path, m)?;
            let mut mode_sup = 0.0f64;
            let mut vec_sup = 0.0f64;
            // sup over s in [0, T]: intervals k = 1..2^m plus the closed endpoint
            for k in 1..=driver.intervals() {
                let mut sq = 0.0;
                for mode in 0..driver.active_modes() {
                    let d = driver.derivative_on_interval(k, mode);
                    mode_sup = mode_sup.max(d.abs());
                    sq += d * d;
                }
                vec_sup = vec_sup.max(sq.sqrt());
            }
            if mode_sup > thr_mode {
                hits_mode += 1;
            }
            if vec_sup > thr_vec {
                hits_vec += 1;
            }
        }
        out.push(TailEstimate {
            m,
            p_mode_sup: hits_mode as f64 / n_samples as f64,
            p_vector_sup: hits_vec as f64 / n_samples as f64,
            n_samples,
        });
    }
    Ok(out)
}

/// Trend check used by reports: nonincreasing up to `se_factor` standard errors.
pub fn is_nonincreasing_within_se(estimates: &[(f64, usize)], se_factor: f64) -> bool {
    estimates.windows(2).all(|w| {
        let (p0, n0) = w[0];
        let (p1, n1) = w[1];
        let se0 = (p0 * (1.0 - p0) / n0 as f64).sqrt();
        let se1 = (p1 * (1.0 - p1) / n1 as f64).sqrt();
        p1 <= p0 + se_factor * (se0 * se0 + se1 * se1).sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_start_at_zero_and_are_deterministic() {
        let p1 = sample_path(42, 1.0, 6, 3).unwrap();
        let p2 = sample_path(42, 1.0, 6, 3).unwrap();
        for mode in 0..3 {
            assert_eq!(p1.value_fine(mode, 0), 0.0);
            for k in 0..=(1 << 6) {
                assert_eq!(p1.value_fine(mode, k).to_bits(), p2.value_fine(mode, k).to_bits());
            }
        }
        let p3 = sample_path(43, 1.0, 6, 3).unwrap();
        assert_ne!(p1.value_fine(0, 64), p3.value_fine(0, 64));
    }

    #[test]
    fn terminal_variance_matches_horizon() {
        // Var(beta(T)) = T, estimated over 10^4 seeds
        let t = 2.0;
        let n = 10_000;
        let mut sum_sq = 0.0;
        for s in 0..n {
            let p = sample_path(rng::derive_seed(7, s), t, 3, 1).unwrap();
            let b = p.value_at_level(0, 0, 1);
            sum_sq += b * b;
        }
        let var = sum_sq / n as f64;
        assert!((var - t).abs() / t < 0.05, "var = {var}");
    }

    #[test]
    fn increment_variance_at_finest_level() {
        let t = 1.0;
        let level = 5;
        let n = 4000;
        let step_var = t / (1u64 << level) as f64;
        let mut sum_sq = 0.0;
        let mut cross = 0.0;
        for s in 0..n {
            let p = sample_path(rng::derive_seed(11, s), t, level, 1).unwrap();
            let d1 = p.increment_at_level(0, level, 3);
            let d2 = p.increment_at_level(0, level, 4);
            sum_sq += d1 * d1;
            cross += d1 * d2;
        }
        let var = sum_sq / n as f64;
        let cov = cross / n as f64;
        assert!((var - step_var).abs() / step_var < 0.1, "var = {var}, want {step_var}");
        assert!(cov.abs() < 3.0 * step_var / (n as f64).sqrt() * 2.0, "cov = {cov}");
    }

    #[test]
    fn coarsening_is_subsampling() {
        let p = sample_path(5, 1.0, 8, 2).unwrap();
        let sub = p.subsample(4).unwrap();
        for mode in 0..2 {
            for k in 0..=16 {
                assert_eq!(
                    p.value_at_level(mode, 4, k).to_bits(),
                    sub.value_fine(mode, k).to_bits()
                );
            }
        }
    }

    #[test]
    fn derivative_zero_on_first_interval() {
        let p = sample_path(3, 1.0, 5, 2).unwrap();
        let d = WzDriver::new(&p, 3).unwrap();
        for t in [0.0, 0.05, 0.1249] {
            assert_eq!(d.derivative(t, 0).unwrap(), 0.0);
            assert!(d.vector(t).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn derivative_matches_hand_example() {
        // T=1, m=2 (varpi = 0.25), beta(0.25) = 0.5 => derivative at 0.3 is 2.0
        let mut values = vec![vec![0.0; 5]];
        values[0] = vec![0.0, 0.5, 0.7, 0.2, 0.9];
        let p = BrownianPath::from_values(1.0, 2, values).unwrap();
        let d = WzDriver::new(&p, 2).unwrap();
        assert!((d.derivative(0.3, 0).unwrap() - 2.0).abs() < 1e-15);
        // interval [0.5, 0.75): (0.7 - 0.5)/0.25
        assert!((d.derivative(0.6, 0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn derivative_integral_telescopes() {
        // integral of the derivative over [0, T] collapses to beta(T - varpi)
        let p = sample_path(9, 1.0, 7, 4).unwrap();
        for m in [2u32, 4, 6] {
            let d = WzDriver::new(&p, m).unwrap();
            for mode in 0..d.active_modes() {
                let mut total = 0.0;
                for k in 0..d.intervals() {
                    total += d.varpi * d.derivative_on_interval(k, mode);
                }
                let expect = p.value_at_level(mode, m, (1usize << m) - 1);
                assert!((total - expect).abs() < 1e-12, "m={m} mode={mode}");
            }
        }
    }

    #[test]
    fn piecewise_constant_on_intervals() {
        let p = sample_path(13, 2.0, 6, 3).unwrap();
        let d = WzDriver::new(&p, 4).unwrap();
        let varpi = d.varpi;
        for k in 0..16usize {
            let t0 = k as f64 * varpi + 1e-9;
            let t1 = (k + 1) as f64 * varpi - 1e-9;
            assert_eq!(
                d.derivative(t0, 1).unwrap().to_bits(),
                d.derivative(t1, 1).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn adapted_to_the_floor_grid_point() {
        // editing strictly-future values never changes the derivative
        let p = sample_path(17, 1.0, 5, 2).unwrap();
        let m = 3u32;
        let t = 0.4; // floor grid point: 3 * 0.125 = 0.375, fine index 12
        let stride = 1usize << (5 - m);
        let floor_fine = (t / (1.0f64 / 8.0)).floor() as usize * stride;
        let mut tampered = (0..2)
            .map(|mode| (0..=32).map(|k| p.value_fine(mode, k)).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        for v in &mut tampered {
            for k in (floor_fine + 1)..=32 {
                v[k] += 100.0;
            }
        }
        let p2 = BrownianPath::from_values(1.0, 5, tampered).unwrap();
        let d1 = WzDriver::new(&p, m).unwrap();
        let d2 = WzDriver::new(&p2, m).unwrap();
        for mode in 0..2 {
            assert_eq!(
                d1.derivative(t, mode).unwrap().to_bits(),
                d2.derivative(t, mode).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn coarsened_driver_agrees_with_subsampled_path() {
        let p = sample_path(23, 1.0, 9, 3).unwrap();
        let m = 5u32;
        let sub = p.subsample(m).unwrap();
        let d_full = WzDriver::new(&p, m).unwrap();
        let d_sub = WzDriver::new(&sub, m).unwrap();
        for k in 0..(1usize << m) {
            for mode in 0..3usize.min(m as usize) {
                assert_eq!(
                    d_full.derivative_on_interval(k, mode).to_bits(),
                    d_sub.derivative_on_interval(k, mode).to_bits()
                );
            }
        }
    }

    #[test]
    fn vector_norm_expectation_matches_m_over_varpi() {
        // E |dW(t)|^2 = m / varpi for t past the first interval
        let t_probe = 0.6;
        let m = 4u32;
        let n = 10_000;
        let mut acc = 0.0;
        for s in 0..n {
            let p = sample_path(rng::derive_seed(29, s), 1.0, m, m as usize).unwrap();
            let d = WzDriver::new(&p, m).unwrap();
            let v = d.vector(t_probe).unwrap();
            acc += v.iter().map(|x| x * x).sum::<f64>();
        }
        let mean = acc / n as f64;
        let varpi = 1.0 / 16.0;
        let expect = m as f64 / varpi;
        assert!((mean - expect).abs() / expect < 0.1, "mean = {mean}, want {expect}");
    }

    #[test]
    fn driver_caps_modes_beyond_available() {
        let p = sample_path(31, 1.0, 6, 2).unwrap();
        let d = WzDriver::new(&p, 5).unwrap();
        assert_eq!(d.active_modes(), 2);
        let v = d.vector(0.9).unwrap();
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn out_of_domain_times_and_modes_error() {
        let p = sample_path(37, 1.0, 4, 2).unwrap();
        let d = WzDriver::new(&p, 2).unwrap();
        assert!(d.derivative(-0.1, 0).is_err());
        assert!(d.derivative(1.1, 0).is_err());
        assert!(d.derivative(0.5, 5).is_err());
    }

    #[test]
    fn tail_estimates_in_range_and_trending_down() {
        let ms = [3u32, 4, 5, 6, 7, 8];
        let est = tail_probability_estimate(1.0, &ms, 2.0, 2000, 1234).unwrap();
        for e in &est {
            assert!((0.0..=1.0).contains(&e.p_mode_sup));
            assert!((0.0..=1.0).contains(&e.p_vector_sup));
        }
        let series: Vec<(f64, usize)> = est.iter().map(|e| (e.p_mode_sup, e.n_samples)).collect();
        assert!(is_nonincreasing_within_se(&series, 2.0));
        assert!(est.last().unwrap().p_mode_sup < 0.05);
    }

    #[test]
    fn tail_single_mode_closed_form_cross_check() {
        // m = 1: the event is a max over two iid normal increments; reduce to
        // the standard normal tail 1 - (2 Phi(delta) - 1)^2 and integrate the
        // density numerically as an independent oracle.
        let delta = 1.0;
        let n = 20_000;
        let est = tail_probability_estimate(1.0, &[1], delta, n, 99).unwrap();
        let phi = |z: f64| {
            // numeric tail integral of the standard normal density
            let steps = 20_000;
            let lo = 0.0;
            let hi = z;
            let h = (hi - lo) / steps as f64;
            let dens = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let mut s = 0.5 * (dens(lo) + dens(hi));
            for i in 1..steps {
                s += dens(lo + i as f64 * h);
            }
            0.5 + s * h
        };
        let p_single = 2.0 * (1.0 - phi(delta));
        let expect = 1.0 - (1.0 - p_single) * (1.0 - p_single);
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        let got = est[0].p_mode_sup;
        assert!((got - expect).abs() < 4.0 * se + 1e-3, "got {got}, want {expect}");
    }
}
