use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wz_sim::cli::{self, RunOverrides};
use wz_sim::config::ExperimentConfig;
use wz_sim::Error;

#[derive(Parser)]
#[command(name = "wz-sim", version, about = "Wong-Zakai approximation lab for variational SPDEs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte-Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (beats the WZ_SIM_THREADS environment variable).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one model on one seed and write its trajectory artifacts.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write trajectory.csv.
        #[arg(long)]
        emit_trajectory: bool,
    },
    /// Strong-convergence study of the smoothed system toward the diffusion.
    Converge {
        #[command(flatten)]
        common: Common,
    },
    /// Controlled-skeleton convergence study.
    Skeleton {
        #[command(flatten)]
        common: Common,
    },
    /// Time-increment modulus decay rates.
    Modulus {
        #[command(flatten)]
        common: Common,
    },
    /// Sampled audits of the operator hypotheses.
    Probe {
        #[command(flatten)]
        common: Common,
    },
    /// Exact finite-sum check of the delayed-coefficient integral identity.
    Identity {
        #[command(flatten)]
        common: Common,
    },
    /// Tail probabilities of the smoothed-noise sup events.
    Tails {
        #[command(flatten)]
        common: Common,
    },
    /// Guard exit-fraction table.
    Guards {
        #[command(flatten)]
        common: Common,
    },
    /// Summarize previously written reports in a directory.
    Report {
        /// Directory holding report JSON files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads(flag: Option<usize>) {
    let from_env = std::env::var("WZ_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = flag.or(from_env) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, RunOverrides), Error> {
    init_threads(common.threads);
    let cfg = ExperimentConfig::from_file(&common.config)?;
    let over = RunOverrides {
        seed: common.seed,
        n_paths: common.paths,
        out_dir: common.out.clone(),
        emit_trajectory: false,
    };
    Ok((cfg, over))
}

fn run() -> Result<i32, Error> {
    match Cli::parse().command {
        Cmd::Simulate { common, emit_trajectory } => {
            let (cfg, mut over) = load(&common)?;
            over.emit_trajectory = emit_trajectory;
            cli::cmd_simulate(cfg, &over)
        }
        Cmd::Converge { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_converge(cfg, &over)
        }
        Cmd::Skeleton { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_skeleton(cfg, &over)
        }
        Cmd::Modulus { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_modulus(cfg, &over)
        }
        Cmd::Probe { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_probe(cfg, &over)
        }
        Cmd::Identity { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_identity(cfg, &over)
        }
        Cmd::Tails { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_tails(cfg, &over)
        }
        Cmd::Guards { common } => {
            let (cfg, over) = load(&common)?;
            cli::cmd_guards(cfg, &over)
        }
        Cmd::Report { out } => cli::cmd_report(&out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(cli::EXIT_CONFIG as u8)
        }
        Err(Error::Blowup { time }) => {
            eprintln!("numerical blow-up at t = {time}");
            ExitCode::from(cli::EXIT_BLOWUP as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_CONFIG as u8)
        }
    }
}
