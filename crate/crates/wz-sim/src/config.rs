//! Experiment configuration: TOML with strict key checking.
//!
//! Parsing walks the raw tables so that unknown keys are rejected with the
//! offending key path instead of being silently dropped; syntax errors carry
//! the line/column from the TOML parser.

use crate::analysis::{StudyConfig, VerdictThresholds};
use crate::error::{Error, Result};
use crate::models::{
    make_burgers, make_burgers_with_initial, make_gbm_with_initial, make_heat_with_initial,
    make_plaplace, make_porous_media, ModelSpec, NoiseSpec,
};
use crate::operators::ControlPath;
use crate::probe::ProbeConfig;
use crate::solvers::{Scheme, SolverConfig};
use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::path::Path;
use toml::Value;

#[derive(Debug, Clone)]
pub enum ModelConfig {
    Gbm { mu: f64, gain: f64, y0: f64 },
    Heat { n_modes: usize, domain_length: f64, nu: f64, initial: Option<Vec<f64>> },
    Burgers { n_modes: usize, domain_length: f64, nu: f64, initial: Option<Vec<f64>> },
    PLaplace { n_modes: usize, domain_length: f64, p: f64 },
    Porous { n_modes: usize, domain_length: f64, r: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub t_horizon: f64,
    pub seed: u64,
    pub n_paths: usize,
    pub m_levels: Vec<u32>,
    pub output_dir: String,
}

#[derive(Debug, Clone)]
pub enum ControlConfig {
    Constant { values: Vec<f64> },
    /// Sinusoid `amplitude * sin(2 pi frequency t)` in one mode, zero elsewhere.
    Sine { amplitude: f64, frequency: f64, dim: usize },
}

#[derive(Debug, Clone)]
pub struct TailsConfig {
    pub delta: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone)]
pub struct IdentityConfig {
    pub m_levels: Vec<u32>,
    pub n_seeds: usize,
    pub tolerance_scale: f64,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub emit_path: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub noise: NoiseSpec,
    pub run: RunConfig,
    pub solver: SolverConfig,
    pub thresholds: VerdictThresholds,
    pub ref_dt_margin: u32,
    pub use_analytic_reference: bool,
    pub control: Option<ControlConfig>,
    pub probe: ProbeConfig,
    pub tails: TailsConfig,
    pub identity: IdentityConfig,
    pub guards: Vec<f64>,
    pub output: OutputConfig,
    /// Verbatim config text, echoed into manifests.
    pub source: String,
}

fn check_keys(table: &toml::Table, allowed: &[&str], path: &str) -> Result<()> {
    let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
    for key in table.keys() {
        if !allowed.contains(key.as_str()) {
            return Err(Error::config(format!(
                "unknown key `{path}{key}`; allowed here: {allowed:?}"
            )));
        }
    }
    Ok(())
}

fn need<'a>(table: &'a toml::Table, key: &str, path: &str) -> Result<&'a Value> {
    table
        .get(key)
        .ok_or_else(|| Error::config(format!("missing key `{path}{key}`")))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(format!("`{path}` must be a number"))),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(format!("`{path}` must be a nonnegative integer"))),
    }
}

fn as_u64(v: &Value, path: &str) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::config(format!("`{path}` must be a nonnegative integer"))),
    }
}

fn as_u32(v: &Value, path: &str) -> Result<u32> {
    Ok(as_usize(v, path)? as u32)
}

fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| Error::config(format!("`{path}` must be a boolean")))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(format!("`{path}` must be a string")))
}

fn as_f64_array(v: &Value, path: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::config(format!("`{path}` must be an array")))?;
    arr.iter().map(|x| as_f64(x, path)).collect()
}

fn as_u32_array(v: &Value, path: &str) -> Result<Vec<u32>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::config(format!("`{path}` must be an array")))?;
    arr.iter().map(|x| as_u32(x, path)).collect()
}

fn as_table<'a>(v: &'a Value, path: &str) -> Result<&'a toml::Table> {
    v.as_table()
        .ok_or_else(|| Error::config(format!("`{path}` must be a table")))
}

fn opt_f64(table: &toml::Table, key: &str, path: &str, default: f64) -> Result<f64> {
    match table.get(key) {
        Some(v) => as_f64(v, &format!("{path}{key}")),
        None => Ok(default),
    }
}

fn opt_bool(table: &toml::Table, key: &str, path: &str, default: bool) -> Result<bool> {
    match table.get(key) {
        Some(v) => as_bool(v, &format!("{path}{key}")),
        None => Ok(default),
    }
}

fn opt_usize(table: &toml::Table, key: &str, path: &str, default: usize) -> Result<usize> {
    match table.get(key) {
        Some(v) => as_usize(v, &format!("{path}{key}")),
        None => Ok(default),
    }
}

fn opt_u32(table: &toml::Table, key: &str, path: &str, default: u32) -> Result<u32> {
    match table.get(key) {
        Some(v) => as_u32(v, &format!("{path}{key}")),
        None => Ok(default),
    }
}

fn parse_model(table: &toml::Table) -> Result<ModelConfig> {
    let path = "model.";
    let name = as_str(need(table, "name", path)?, "model.name")?;
    match name {
        "gbm" => {
            check_keys(table, &["name", "noise", "mu", "a", "y0"], path)?;
            Ok(ModelConfig::Gbm {
                mu: opt_f64(table, "mu", path, 0.1)?,
                gain: opt_f64(table, "a", path, 0.5)?,
                y0: opt_f64(table, "y0", path, 1.0)?,
            })
        }
        "heat" | "burgers" => {
            check_keys(
                table,
                &["name", "noise", "n_modes", "domain_length", "nu", "initial"],
                path,
            )?;
            let n_modes = opt_usize(table, "n_modes", path, 16)?;
            let domain_length = opt_f64(table, "domain_length", path, 2.0)?;
            let nu = opt_f64(table, "nu", path, 1.0)?;
            let initial = match table.get("initial") {
                Some(v) => Some(as_f64_array(v, "model.initial")?),
                None => None,
            };
            if name == "heat" {
                Ok(ModelConfig::Heat { n_modes, domain_length, nu, initial })
            } else {
                Ok(ModelConfig::Burgers { n_modes, domain_length, nu, initial })
            }
        }
        "plaplace" => {
            check_keys(table, &["name", "noise", "n_modes", "domain_length", "p"], path)?;
            Ok(ModelConfig::PLaplace {
                n_modes: opt_usize(table, "n_modes", path, 12)?,
                domain_length: opt_f64(table, "domain_length", path, 2.0)?,
                p: opt_f64(table, "p", path, 3.0)?,
            })
        }
        "porous" => {
            check_keys(table, &["name", "noise", "n_modes", "domain_length", "r"], path)?;
            Ok(ModelConfig::Porous {
                n_modes: opt_usize(table, "n_modes", path, 12)?,
                domain_length: opt_f64(table, "domain_length", path, 2.0)?,
                r: opt_f64(table, "r", path, 3.0)?,
            })
        }
        other => Err(Error::config(format!(
            "unknown model `{other}`; expected gbm, heat, burgers, plaplace, or porous"
        ))),
    }
}

fn parse_noise(table: &toml::Table) -> Result<NoiseSpec> {
    let path = "model.noise.";
    let kind = as_str(need(table, "kind", path)?, "model.noise.kind")?;
    match kind {
        "none" => {
            check_keys(table, &["kind"], path)?;
            Ok(NoiseSpec::None)
        }
        "additive" => {
            check_keys(table, &["kind", "amplitudes"], path)?;
            Ok(NoiseSpec::Additive {
                amplitudes: as_f64_array(need(table, "amplitudes", path)?, "model.noise.amplitudes")?,
            })
        }
        "diagonal_linear" => {
            check_keys(table, &["kind", "gains"], path)?;
            Ok(NoiseSpec::DiagonalLinear {
                gains: as_f64_array(need(table, "gains", path)?, "model.noise.gains")?,
            })
        }
        "tanh" => {
            check_keys(table, &["kind", "gains"], path)?;
            Ok(NoiseSpec::Tanh {
                gains: as_f64_array(need(table, "gains", path)?, "model.noise.gains")?,
            })
        }
        other => Err(Error::config(format!(
            "unknown noise kind `{other}`; expected none, additive, diagonal_linear, or tanh"
        ))),
    }
}

fn parse_solver(table: &toml::Table) -> Result<SolverConfig> {
    let path = "solver.";
    check_keys(
        table,
        &[
            "scheme",
            "dt_level",
            "substeps_per_interval",
            "taming_enabled",
            "taming_power",
            "max_norm_guard",
            "store_level",
            "correction_enabled",
        ],
        path,
    )?;
    let default = SolverConfig::default();
    let scheme = match table.get("scheme") {
        Some(v) => match as_str(v, "solver.scheme")? {
            "explicit-euler" => Scheme::ExplicitEuler,
            "heun" => Scheme::Heun,
            other => {
                return Err(Error::config(format!(
                    "unknown scheme `{other}`; expected explicit-euler or heun"
                )))
            }
        },
        None => default.scheme,
    };
    Ok(SolverConfig {
        scheme,
        dt_level: opt_u32(table, "dt_level", path, default.dt_level)?,
        substeps_per_interval: opt_u32(table, "substeps_per_interval", path, default.substeps_per_interval)?,
        taming_enabled: opt_bool(table, "taming_enabled", path, default.taming_enabled)?,
        taming_power: opt_f64(table, "taming_power", path, default.taming_power)?,
        max_norm_guard: opt_f64(table, "max_norm_guard", path, f64::INFINITY)?,
        store_level: opt_u32(table, "store_level", path, default.store_level)?,
        correction_enabled: opt_bool(table, "correction_enabled", path, default.correction_enabled)?,
    })
}

fn parse_thresholds(table: &toml::Table) -> Result<VerdictThresholds> {
    let path = "verdict.";
    check_keys(
        table,
        &[
            "max_inversions",
            "inversion_se_factor",
            "reduction_factor",
            "blowup_quota",
            "modulus_slope_max",
            "tail_final_max",
            "energy_ratio_max",
        ],
        path,
    )?;
    let d = VerdictThresholds::default();
    Ok(VerdictThresholds {
        max_inversions: opt_usize(table, "max_inversions", path, d.max_inversions)?,
        inversion_se_factor: opt_f64(table, "inversion_se_factor", path, d.inversion_se_factor)?,
        reduction_factor: opt_f64(table, "reduction_factor", path, d.reduction_factor)?,
        blowup_quota: opt_f64(table, "blowup_quota", path, d.blowup_quota)?,
        modulus_slope_max: opt_f64(table, "modulus_slope_max", path, d.modulus_slope_max)?,
        tail_final_max: opt_f64(table, "tail_final_max", path, d.tail_final_max)?,
        energy_ratio_max: opt_f64(table, "energy_ratio_max", path, d.energy_ratio_max)?,
    })
}

fn parse_control(table: &toml::Table) -> Result<ControlConfig> {
    let path = "control.";
    let kind = as_str(need(table, "kind", path)?, "control.kind")?;
    match kind {
        "constant" => {
            check_keys(table, &["kind", "values"], path)?;
            Ok(ControlConfig::Constant {
                values: as_f64_array(need(table, "values", path)?, "control.values")?,
            })
        }
        "sine" => {
            check_keys(table, &["kind", "amplitude", "frequency", "dim"], path)?;
            Ok(ControlConfig::Sine {
                amplitude: opt_f64(table, "amplitude", path, 1.0)?,
                frequency: opt_f64(table, "frequency", path, 1.0)?,
                dim: opt_usize(table, "dim", path, 1)?,
            })
        }
        other => Err(Error::config(format!(
            "unknown control kind `{other}`; expected constant or sine"
        ))),
    }
}

impl ExperimentConfig {
    pub fn from_str(source: &str) -> Result<Self> {
        let root: toml::Table = source
            .parse()
            .map_err(|e: toml::de::Error| Error::config(format!("TOML parse error: {e}")))?;
        check_keys(
            &root,
            &["model", "run", "solver", "verdict", "study", "control", "probe", "identity", "output"],
            "",
        )?;

        let model_table = as_table(need(&root, "model", "")?, "model")?;
        let model = parse_model(model_table)?;
        let noise = match model_table.get("noise") {
            Some(v) => parse_noise(as_table(v, "model.noise")?)?,
            None => NoiseSpec::None,
        };

        let run_table = as_table(need(&root, "run", "")?, "run")?;
        check_keys(
            run_table,
            &["t_horizon", "seed", "n_paths", "m_levels", "output_dir"],
            "run.",
        )?;
        let run = RunConfig {
            t_horizon: opt_f64(run_table, "t_horizon", "run.", 1.0)?,
            seed: match run_table.get("seed") {
                Some(v) => as_u64(v, "run.seed")?,
                None => 2024,
            },
            n_paths: opt_usize(run_table, "n_paths", "run.", 200)?,
            m_levels: match run_table.get("m_levels") {
                Some(v) => as_u32_array(v, "run.m_levels")?,
                None => vec![3, 4, 5, 6, 7],
            },
            output_dir: match run_table.get("output_dir") {
                Some(v) => as_str(v, "run.output_dir")?.to_string(),
                None => "out".to_string(),
            },
        };
        if !(run.t_horizon > 0.0) {
            return Err(Error::config("run.t_horizon must be positive"));
        }

        let solver = match root.get("solver") {
            Some(v) => parse_solver(as_table(v, "solver")?)?,
            None => SolverConfig::default(),
        };
        let thresholds = match root.get("verdict") {
            Some(v) => parse_thresholds(as_table(v, "verdict")?)?,
            None => VerdictThresholds::default(),
        };

        let (ref_dt_margin, use_analytic_reference, tails, guards) = match root.get("study") {
            Some(v) => {
                let t = as_table(v, "study")?;
                check_keys(
                    t,
                    &["ref_dt_margin", "use_analytic_reference", "delta", "n_samples", "guards"],
                    "study.",
                )?;
                (
                    opt_u32(t, "ref_dt_margin", "study.", 4)?,
                    opt_bool(t, "use_analytic_reference", "study.", true)?,
                    TailsConfig {
                        delta: opt_f64(t, "delta", "study.", 2.0)?,
                        n_samples: opt_usize(t, "n_samples", "study.", 2000)?,
                    },
                    match t.get("guards") {
                        Some(v) => as_f64_array(v, "study.guards")?,
                        None => vec![2.0, 4.0, 8.0],
                    },
                )
            }
            None => (
                4,
                true,
                TailsConfig { delta: 2.0, n_samples: 2000 },
                vec![2.0, 4.0, 8.0],
            ),
        };

        let control = match root.get("control") {
            Some(v) => Some(parse_control(as_table(v, "control")?)?),
            None => None,
        };

        let probe = match root.get("probe") {
            Some(v) => {
                let t = as_table(v, "probe")?;
                check_keys(
                    t,
                    &["r_max", "n_trials", "seed", "tolerance", "hemi_points", "hemi_tol"],
                    "probe.",
                )?;
                let d = ProbeConfig::default();
                ProbeConfig {
                    r_max: opt_f64(t, "r_max", "probe.", d.r_max)?,
                    n_trials: opt_usize(t, "n_trials", "probe.", d.n_trials)?,
                    seed: match t.get("seed") {
                        Some(v) => as_u64(v, "probe.seed")?,
                        None => run.seed,
                    },
                    tolerance: opt_f64(t, "tolerance", "probe.", d.tolerance)?,
                    hemi_points: opt_usize(t, "hemi_points", "probe.", d.hemi_points)?,
                    hemi_tol: opt_f64(t, "hemi_tol", "probe.", d.hemi_tol)?,
                }
            }
            None => ProbeConfig { seed: run.seed, ..Default::default() },
        };

        let identity = match root.get("identity") {
            Some(v) => {
                let t = as_table(v, "identity")?;
                check_keys(t, &["m_levels", "n_seeds", "tolerance_scale"], "identity.")?;
                IdentityConfig {
                    m_levels: match t.get("m_levels") {
                        Some(v) => as_u32_array(v, "identity.m_levels")?,
                        None => vec![2, 3, 4, 5, 6],
                    },
                    n_seeds: opt_usize(t, "n_seeds", "identity.", 50)?,
                    tolerance_scale: opt_f64(t, "tolerance_scale", "identity.", 1e-12)?,
                }
            }
            None => IdentityConfig {
                m_levels: vec![2, 3, 4, 5, 6],
                n_seeds: 50,
                tolerance_scale: 1e-12,
            },
        };

        let output = match root.get("output") {
            Some(v) => {
                let t = as_table(v, "output")?;
                check_keys(t, &["emit_path"], "output.")?;
                OutputConfig { emit_path: opt_bool(t, "emit_path", "output.", false)? }
            }
            None => OutputConfig { emit_path: false },
        };

        Ok(ExperimentConfig {
            model,
            noise,
            run,
            solver,
            thresholds,
            ref_dt_margin,
            use_analytic_reference,
            control,
            probe,
            tails,
            identity,
            guards,
            output,
            source: source.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let source = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&source)
    }

    pub fn build_model(&self) -> Result<ModelSpec> {
        match &self.model {
            ModelConfig::Gbm { mu, gain, y0 } => {
                // the scalar model owns its single noise mode
                match &self.noise {
                    NoiseSpec::None | NoiseSpec::DiagonalLinear { .. } => {}
                    _ => {
                        return Err(Error::config(
                            "the scalar model supports only diagonal_linear noise",
                        ))
                    }
                }
                make_gbm_with_initial(*mu, *gain, *y0)
            }
            ModelConfig::Heat { n_modes, domain_length, nu, initial } => {
                make_heat_with_initial(*n_modes, *domain_length, *nu, &self.noise, initial.clone())
            }
            ModelConfig::Burgers { n_modes, domain_length, nu, initial } => match initial {
                Some(init) => make_burgers_with_initial(
                    *n_modes,
                    *domain_length,
                    *nu,
                    &self.noise,
                    Some(init.clone()),
                ),
                None => make_burgers(*n_modes, *domain_length, *nu, &self.noise),
            },
            ModelConfig::PLaplace { n_modes, domain_length, p } => {
                make_plaplace(*n_modes, *domain_length, *p, &self.noise)
            }
            ModelConfig::Porous { n_modes, domain_length, r } => {
                make_porous_media(*n_modes, *domain_length, *r, &self.noise)
            }
        }
    }

    pub fn study_config(&self) -> StudyConfig {
        StudyConfig {
            t_horizon: self.run.t_horizon,
            m_levels: self.run.m_levels.clone(),
            n_paths: self.run.n_paths,
            seed: self.run.seed,
            solver: self.solver,
            ref_dt_margin: self.ref_dt_margin,
            use_analytic_reference: self.use_analytic_reference,
            thresholds: self.thresholds,
            delta: self.tails.delta,
        }
    }

    /// Builds the control path for skeleton runs; defaults to a first-mode
    /// sinusoid when no `[control]` table is given.
    pub fn build_control(&self, noise_dim: usize) -> ControlPath {
        let dim = noise_dim.max(1);
        match &self.control {
            Some(ControlConfig::Constant { values }) => {
                ControlPath::constant(values.clone(), self.run.t_horizon)
            }
            Some(ControlConfig::Sine { amplitude, frequency, dim: mode }) => {
                let slot = (*mode).max(1).min(dim);
                let (a, f) = (*amplitude, *frequency);
                ControlPath::sampled(self.run.t_horizon, 256, dim, move |t| {
                    let mut v = vec![0.0; dim];
                    v[slot - 1] = a * (TAU * f * t).sin();
                    v
                })
            }
            None => ControlPath::sampled(self.run.t_horizon, 256, dim, move |t| {
                let mut v = vec![0.0; dim];
                v[0] = (TAU * t).sin();
                v
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[model]
name = "heat"
n_modes = 8
domain_length = 2.0
nu = 1.0

[model.noise]
kind = "diagonal_linear"
gains = [0.4, 0.2, 0.1]

[run]
t_horizon = 1.0
seed = 42
n_paths = 50
m_levels = [3, 4, 5]

[solver]
dt_level = 9
store_level = 9
"#;

    #[test]
    fn parses_a_complete_config() {
        let cfg = ExperimentConfig::from_str(GOOD).unwrap();
        let model = cfg.build_model().unwrap();
        assert_eq!(model.name, "heat");
        assert_eq!(model.dim(), 8);
        assert_eq!(model.noise.mode_count(), 3);
        assert_eq!(cfg.run.m_levels, vec![3, 4, 5]);
        assert_eq!(cfg.solver.dt_level, 9);
    }

    #[test]
    fn rejects_unknown_keys_with_path() {
        let bad = GOOD.replace("nu = 1.0", "nu = 1.0\nviscosity_typo = 2.0");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("model.viscosity_typo"), "{msg}");

        let bad2 = format!("{GOOD}\n[sovler]\ndt_level = 3\n");
        let err2 = ExperimentConfig::from_str(&bad2).unwrap_err();
        assert!(err2.to_string().contains("sovler"), "{err2}");
    }

    #[test]
    fn rejects_syntax_errors_with_location() {
        let err = ExperimentConfig::from_str("[model\nname = \"gbm\"").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("TOML parse error"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn rejects_wrong_types() {
        let bad = GOOD.replace("seed = 42", "seed = \"abc\"");
        let err = ExperimentConfig::from_str(&bad).unwrap_err();
        assert!(err.to_string().contains("run.seed"), "{err}");
    }

    #[test]
    fn gbm_defaults_build() {
        let cfg = ExperimentConfig::from_str(
            "[model]\nname = \"gbm\"\nmu = 0.1\na = 0.5\n\n[run]\nseed = 1\n",
        )
        .unwrap();
        let model = cfg.build_model().unwrap();
        assert!(model.oracle.is_some());
        assert_eq!(model.noise.mode_count(), 1);
    }

    #[test]
    fn control_paths_build() {
        let cfg = ExperimentConfig::from_str(
            "[model]\nname = \"gbm\"\n\n[run]\nseed = 1\n\n[control]\nkind = \"constant\"\nvalues = [0.3]\n",
        )
        .unwrap();
        let g = cfg.build_control(1);
        let mut buf = [0.0];
        g.eval_into(0.5, &mut buf);
        assert_eq!(buf[0], 0.3);
    }
}
