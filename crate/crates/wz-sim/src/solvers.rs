//! Time integrators sharing one Brownian path realization.
//!
//! Three entry points:
//! - `solve_ito`: Euler-Maruyama (optionally Heun drift) for the Galerkin
//!   diffusion, reading increments from the shared path grid;
//! - `solve_wong_zakai`: pathwise integration of the random ODE driven by the
//!   piecewise-constant derivative, with the correction term subtracted;
//! - `solve_controlled`: the general stepper covering diffusion, smoothed
//!   drift, control forcing, and damping in one loop. With the smoothed-noise
//!   specialization it reproduces `solve_wong_zakai` bit for bit, which the
//!   tests assert; the two loops are deliberately kept as separate code.
//!
//! Every stepper records the stopped-process guard: `exited_at` is the first
//! grid time where the H norm or the accumulated V-power integral crosses the
//! configured threshold, after which the state is frozen.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::noise::{BrownianPath, WzDriver};
use crate::operators::{correction_term_into, ControlledBundle};
use crate::spaces::{CoefState, GalerkinSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ExplicitEuler,
    Heun,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Ito time step is T / 2^dt_level.
    pub dt_level: u32,
    /// Substeps per derivative interval in the smoothed runs.
    pub substeps_per_interval: u32,
    pub taming_enabled: bool,
    pub taming_power: f64,
    /// Guard threshold for the H norm and the V-power integral.
    pub max_norm_guard: f64,
    /// Trajectory storage at 2^store_level uniform times (or every step if coarser).
    pub store_level: u32,
    /// Dropping the correction term steers the smoothed system to the
    /// Stratonovich limit instead; used by the necessity experiment.
    pub correction_enabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            scheme: Scheme::ExplicitEuler,
            dt_level: 10,
            substeps_per_interval: 8,
            taming_enabled: false,
            taming_power: 1.0,
            max_norm_guard: f64::INFINITY,
            store_level: 10,
            correction_enabled: true,
        }
    }
}

/// Stored sample of one solver run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CoefState>,
    pub norms_h: Vec<f64>,
    pub norms_v: Vec<f64>,
    /// First stored-grid time at which the guard tripped, if any.
    pub exited_at: Option<f64>,
    /// Running sup of the H norm at integrator resolution.
    pub sup_norm_h: f64,
    /// Accumulated `int |y|_V^beta dt` at integrator resolution.
    pub v_beta_integral: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &CoefState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Stored index of the dyadic grid point `k T / 2^level`; the stored grid
    /// must refine that level.
    pub fn dyadic_index(&self, level: u32, k: usize) -> usize {
        let intervals = self.len() - 1;
        let per = intervals >> level;
        debug_assert!(per << level == intervals, "stored grid must refine level {level}");
        k * per
    }

    /// CSV export with header `t,c_1,...,c_n,norm_h,norm_v`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.dim());
        write!(w, "t")?;
        for k in 1..=n {
            write!(w, ",c_{k}")?;
        }
        writeln!(w, ",norm_h,norm_v")?;
        for (j, t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for c in &self.states[j].coeffs {
                write!(w, ",{c}")?;
            }
            writeln!(w, ",{},{}", self.norms_h[j], self.norms_v[j])?;
        }
        Ok(())
    }
}

struct Recorder<'a> {
    space: &'a GalerkinSpace,
    beta: f64,
    guard: f64,
    stride: usize,
    dt: f64,
    traj: Trajectory,
    frozen: bool,
}

impl<'a> Recorder<'a> {
    fn new(space: &'a GalerkinSpace, beta: f64, cfg: &SolverConfig, total_steps: usize, dt: f64, y0: &[f64]) -> Self {
        let capacity = 1usize << cfg.store_level;
        let stride = if total_steps > capacity && total_steps % capacity == 0 {
            total_steps / capacity
        } else {
            1
        };
        let h0 = space.norm_h(y0);
        let v0 = space.norm_v(y0);
        let mut traj = Trajectory {
            times: Vec::with_capacity(total_steps / stride + 1),
            states: Vec::with_capacity(total_steps / stride + 1),
            norms_h: Vec::with_capacity(total_steps / stride + 1),
            norms_v: Vec::with_capacity(total_steps / stride + 1),
            exited_at: None,
            sup_norm_h: h0,
            v_beta_integral: 0.0,
        };
        traj.times.push(0.0);
        traj.states.push(CoefState { coeffs: y0.to_vec(), time: 0.0 });
        traj.norms_h.push(h0);
        traj.norms_v.push(v0);
        let mut rec = Recorder { space, beta, guard: cfg.max_norm_guard, stride, dt, traj, frozen: false };
        if h0 > rec.guard {
            rec.traj.exited_at = Some(0.0);
            rec.frozen = true;
        }
        rec
    }

    /// Records the state after step `step_idx` (1-based grid position) and
    /// applies the guard. Returns an error on non-finite states.
    fn after_step(&mut self, step_idx: usize, t_new: f64, y: &mut [f64], y_prev_v_norm: f64) -> Result<()> {
        if !self.frozen {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Blowup { time: t_new - self.dt });
            }
            self.traj.v_beta_integral += self.dt * y_prev_v_norm.powf(self.beta);
            let h = self.space.norm_h(y);
            self.traj.sup_norm_h = self.traj.sup_norm_h.max(h);
            if self.traj.exited_at.is_none() && (h > self.guard || self.traj.v_beta_integral > self.guard) {
                self.traj.exited_at = Some(t_new);
                self.frozen = true;
            }
        }
        if step_idx % self.stride == 0 {
            let h = self.space.norm_h(y);
            let v = self.space.norm_v(y);
            self.traj.times.push(t_new);
            self.traj.states.push(CoefState { coeffs: y.to_vec(), time: t_new });
            self.traj.norms_h.push(h);
            self.traj.norms_v.push(v);
        }
        Ok(())
    }

    fn frozen(&self) -> bool {
        self.frozen
    }

    fn finish(self) -> Trajectory {
        self.traj
    }
}

#[inline]
fn tame(a: &mut [f64], dt: f64, space: &GalerkinSpace, enabled: bool, power: f64) {
    if !enabled {
        return;
    }
    let norm = space.norm_h(a);
    let divisor = 1.0 + (dt * norm).powf(power);
    for v in a.iter_mut() {
        *v /= divisor;
    }
}

fn check_noise_modes(model: &ModelSpec, path: &BrownianPath) -> Result<()> {
    if model.noise.mode_count() > path.n_noise_modes {
        return Err(Error::invalid(format!(
            "path carries {} noise modes but the model needs {}",
            path.n_noise_modes,
            model.noise.mode_count()
        )));
    }
    Ok(())
}

/// Euler-Maruyama (optionally Heun drift) for the Galerkin diffusion, with
/// diffusion increments read from the shared path coarsened to `dt_level`.
pub fn solve_ito(model: &ModelSpec, path: &BrownianPath, cfg: &SolverConfig) -> Result<Trajectory> {
    if cfg.dt_level > path.max_level {
        return Err(Error::invalid(format!(
            "dt_level {} exceeds path resolution {}",
            cfg.dt_level, path.max_level
        )));
    }
    check_noise_modes(model, path)?;
    let space = model.space.as_ref();
    let n = space.n_modes;
    let n_steps = 1usize << cfg.dt_level;
    let dt = path.t_horizon / n_steps as f64;
    let modes = model.noise.mode_count();

    let mut y = model.initial_state.coeffs.clone();
    let mut a = vec![0.0; n];
    let mut a2 = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut sig = vec![0.0; n];
    let mut rec = Recorder::new(space, model.beta(), cfg, n_steps, dt, &y);

    for step in 0..n_steps {
        if rec.frozen() {
            let t_new = (step + 1) as f64 * dt;
            rec.after_step(step + 1, t_new, &mut y, 0.0)?;
            continue;
        }
        let t = step as f64 * dt;
        let v_prev = space.norm_v(&y);
        model.drift.eval_into(t, &y, &mut a);
        tame(&mut a, dt, space, cfg.taming_enabled, cfg.taming_power);
        if cfg.scheme == Scheme::Heun {
            for d in 0..n {
                pred[d] = y[d] + dt * a[d];
            }
            model.drift.eval_into(t + dt, &pred, &mut a2);
            tame(&mut a2, dt, space, cfg.taming_enabled, cfg.taming_power);
            for d in 0..n {
                a[d] = 0.5 * (a[d] + a2[d]);
            }
        }
        // diffusion evaluated at the pre-step state
        for d in 0..n {
            pred[d] = y[d] + dt * a[d];
        }
        for i in 0..modes {
            let db = path.increment_at_level(i, cfg.dt_level, step);
            model.noise.apply_mode_into(&y, i, &mut sig);
            for d in 0..n {
                pred[d] += db * sig[d];
            }
        }
        y.copy_from_slice(&pred);
        let t_new = (step + 1) as f64 * dt;
        rec.after_step(step + 1, t_new, &mut y, v_prev)?;
    }
    Ok(rec.finish())
}

/// Pathwise integration of the smoothed random ODE at level `m`: within each
/// derivative interval the driver is frozen and `substeps_per_interval`
/// explicit steps advance
/// `y' = A_tamed(t, y) + sigma(y) dW^m - correction/2`.
pub fn solve_wong_zakai(model: &ModelSpec, path: &BrownianPath, m: u32, cfg: &SolverConfig) -> Result<Trajectory> {
    check_noise_modes(model, path)?;
    let driver = WzDriver::new(path, m)?;
    let space = model.space.as_ref();
    let n = space.n_modes;
    let k_sub = cfg.substeps_per_interval.max(1) as usize;
    let intervals = driver.intervals();
    let total_steps = intervals * k_sub;
    let h = driver.varpi / k_sub as f64;
    let active = (m as usize).min(model.noise.mode_count()).min(path.n_noise_modes);
    let corr_modes = (m as usize).min(model.noise.mode_count());

    let mut y = model.initial_state.coeffs.clone();
    let mut a = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut rhs2 = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut sig = vec![0.0; n];
    let mut corr = vec![0.0; n];
    let mut corr_buf = vec![0.0; n];
    let mut rec = Recorder::new(space, model.beta(), cfg, total_steps, h, &y);

    let assemble = |t: f64, y: &[f64], wz: &[f64], a: &mut [f64], sig: &mut [f64], corr: &mut [f64], corr_buf: &mut [f64], rhs: &mut [f64]| {
        model.drift.eval_into(t, y, a);
        tame(a, h, space, cfg.taming_enabled, cfg.taming_power);
        rhs.copy_from_slice(a);
        for i in 0..active {
            let w = wz[i];
            if w != 0.0 {
                model.noise.apply_mode_into(y, i, sig);
                for d in 0..n {
                    rhs[d] += w * sig[d];
                }
            }
        }
        if cfg.correction_enabled {
            correction_term_into(model.noise.as_ref(), corr_modes, y, sig, corr_buf, corr);
            for d in 0..n {
                rhs[d] -= 0.5 * corr[d];
            }
        }
    };

    for interval in 0..intervals {
        let wz = driver.vector_on_interval(interval);
        for j in 0..k_sub {
            let step = interval * k_sub + j;
            if rec.frozen() {
                let t_new = (step + 1) as f64 * h;
                rec.after_step(step + 1, t_new, &mut y, 0.0)?;
                continue;
            }
            let t = step as f64 * h;
            let v_prev = space.norm_v(&y);
            assemble(t, &y, &wz, &mut a, &mut sig, &mut corr, &mut corr_buf, &mut rhs);
            if cfg.scheme == Scheme::Heun {
                for d in 0..n {
                    pred[d] = y[d] + h * rhs[d];
                }
                assemble(t + h, &pred, &wz, &mut a, &mut sig, &mut corr, &mut corr_buf, &mut rhs2);
                for d in 0..n {
                    rhs[d] = 0.5 * (rhs[d] + rhs2[d]);
                }
            }
            for d in 0..n {
                y[d] += h * rhs[d];
            }
            let t_new = (step + 1) as f64 * h;
            rec.after_step(step + 1, t_new, &mut y, v_prev)?;
        }
    }
    Ok(rec.finish())
}

/// One stepper for the general controlled system
/// `dX = A dt + sigma1 dW + sigma2 dW^m dt + sigma3 g dt - G dt`.
///
/// The structure mirrors `solve_wong_zakai` exactly (same interval/substep
/// grid, same assembly order), so the `(0, sigma, 0, Tr/2)` specialization is
/// bit-identical to it; diffusion increments are read at the substep grid,
/// which therefore must align with a stored path level when `sigma1 != 0`.
pub fn solve_controlled(
    model: &ModelSpec,
    bundle: &ControlledBundle,
    path: &BrownianPath,
    m: u32,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let driver = WzDriver::new(path, m)?;
    let space = model.space.as_ref();
    let n = space.n_modes;
    let k_sub = cfg.substeps_per_interval.max(1) as usize;
    let intervals = driver.intervals();
    let total_steps = intervals * k_sub;
    let h = driver.varpi / k_sub as f64;

    let has_diffusion = !bundle.sigma1.is_zero();
    let sub_level = if has_diffusion {
        if !k_sub.is_power_of_two() {
            return Err(Error::invalid("diffusion in the controlled stepper needs power-of-two substeps"));
        }
        let level = m + k_sub.trailing_zeros();
        if level > path.max_level {
            return Err(Error::invalid(format!(
                "substep grid level {level} exceeds path resolution {}",
                path.max_level
            )));
        }
        if bundle.sigma1.mode_count() > path.n_noise_modes {
            return Err(Error::invalid("path carries too few modes for sigma1"));
        }
        level
    } else {
        m
    };
    let active2 = (m as usize).min(bundle.sigma2.mode_count()).min(path.n_noise_modes);
    let control_dim = bundle.control.as_ref().map_or(0, |g| g.dim());
    let active3 = bundle.sigma3.mode_count().min(control_dim);

    let mut y = model.initial_state.coeffs.clone();
    let mut a = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut rhs2 = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut sig = vec![0.0; n];
    let mut damp = vec![0.0; n];
    let mut damp_buf = vec![0.0; n];
    let mut gval = vec![0.0; control_dim.max(1)];
    let mut rec = Recorder::new(space, model.beta(), cfg, total_steps, h, &y);

    let assemble = |t: f64, y: &[f64], wz: &[f64], a: &mut [f64], sig: &mut [f64], damp: &mut [f64], damp_buf: &mut [f64], gval: &mut [f64], rhs: &mut [f64]| {
        model.drift.eval_into(t, y, a);
        tame(a, h, space, cfg.taming_enabled, cfg.taming_power);
        rhs.copy_from_slice(a);
        for i in 0..active2 {
            let w = wz[i];
            if w != 0.0 {
                bundle.sigma2.apply_mode_into(y, i, sig);
                for d in 0..n {
                    rhs[d] += w * sig[d];
                }
            }
        }
        if active3 > 0 {
            bundle.control.as_ref().expect("control present").eval_into(t, gval);
            for i in 0..active3 {
                let g = gval[i];
                if g != 0.0 {
                    bundle.sigma3.apply_mode_into(y, i, sig);
                    for d in 0..n {
                        rhs[d] += g * sig[d];
                    }
                }
            }
        }
        if !bundle.damping.is_zero() {
            bundle.damping.eval_into(y, sig, damp_buf, damp);
            for d in 0..n {
                rhs[d] -= damp[d];
            }
        }
    };

    for interval in 0..intervals {
        let wz = driver.vector_on_interval(interval);
        for j in 0..k_sub {
            let step = interval * k_sub + j;
            if rec.frozen() {
                let t_new = (step + 1) as f64 * h;
                rec.after_step(step + 1, t_new, &mut y, 0.0)?;
                continue;
            }
            let t = step as f64 * h;
            let v_prev = space.norm_v(&y);
            assemble(t, &y, &wz, &mut a, &mut sig, &mut damp, &mut damp_buf, &mut gval, &mut rhs);
            if cfg.scheme == Scheme::Heun {
                for d in 0..n {
                    pred[d] = y[d] + h * rhs[d];
                }
                assemble(t + h, &pred, &wz, &mut a, &mut sig, &mut damp, &mut damp_buf, &mut gval, &mut rhs2);
                for d in 0..n {
                    rhs[d] = 0.5 * (rhs[d] + rhs2[d]);
                }
            }
            if has_diffusion {
                for d in 0..n {
                    pred[d] = y[d] + h * rhs[d];
                }
                for i in 0..bundle.sigma1.mode_count() {
                    let db = path.increment_at_level(i, sub_level, step);
                    bundle.sigma1.apply_mode_into(&y, i, &mut sig);
                    for d in 0..n {
                        pred[d] += db * sig[d];
                    }
                }
                y.copy_from_slice(&pred);
            } else {
                for d in 0..n {
                    y[d] += h * rhs[d];
                }
            }
            let t_new = (step + 1) as f64 * h;
            rec.after_step(step + 1, t_new, &mut y, v_prev)?;
        }
    }
    Ok(rec.finish())
}

/// `sup_t |a(t) - b(t)|_H` over the common grid; if the grids differ, `b` is
/// interpolated onto `a`'s grid piecewise-linearly.
pub fn sup_h_distance(space: &GalerkinSpace, a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let n = space.n_modes;
    if a.states[0].dim() != n || b.states[0].dim() != n {
        return Err(Error::Dimension {
            context: "sup_h_distance",
            expected: n,
            got: a.states[0].dim().max(b.states[0].dim()),
        });
    }
    let mut diff = vec![0.0; n];
    let mut sup = 0.0f64;
    if a.times.len() == b.times.len()
        && a.times
            .iter()
            .zip(&b.times)
            .all(|(x, y)| (x - y).abs() < 1e-12)
    {
        for j in 0..a.times.len() {
            for d in 0..n {
                diff[d] = a.states[j].coeffs[d] - b.states[j].coeffs[d];
            }
            sup = sup.max(space.norm_h(&diff));
        }
        return Ok(sup);
    }
    // piecewise-linear interpolation of b onto a's grid
    let mut cursor = 0usize;
    for j in 0..a.times.len() {
        let t = a.times[j];
        while cursor + 1 < b.times.len() && b.times[cursor + 1] < t {
            cursor += 1;
        }
        let (t0, t1) = (b.times[cursor], b.times[(cursor + 1).min(b.times.len() - 1)]);
        let w = if t1 > t0 { ((t - t0) / (t1 - t0)).clamp(0.0, 1.0) } else { 0.0 };
        let s0 = &b.states[cursor].coeffs;
        let s1 = &b.states[(cursor + 1).min(b.times.len() - 1)].coeffs;
        for d in 0..n {
            let interp = (1.0 - w) * s0[d] + w * s1[d];
            diff[d] = a.states[j].coeffs[d] - interp;
        }
        sup = sup.max(space.norm_h(&diff));
    }
    Ok(sup)
}
