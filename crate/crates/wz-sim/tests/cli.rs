//! End-to-end tests of the batch binary: exit codes, file schemas, and
//! byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wz-sim"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn gbm_config(out: &Path) -> String {
    format!(
        r#"
[model]
name = "gbm"
mu = 0.1
a = 0.5

[run]
t_horizon = 1.0
seed = 11
n_paths = 60
m_levels = [3, 4, 5]
output_dir = "{}"

[solver]
dt_level = 9
store_level = 9
substeps_per_interval = 8

[verdict]
reduction_factor = 1.5

[identity]
n_seeds = 10
m_levels = [2, 3, 4]
"#,
        out.display()
    )
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary must run")
}

#[test]
fn simulate_writes_files_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run1");
    let cfg = write_config(tmp.path(), &gbm_config(&out));
    let status = run(bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--emit-trajectory"]));
    assert!(status.status.success(), "{status:?}");
    assert!(out.join("summary.json").exists());
    assert!(out.join("trajectory.csv").exists());
    assert!(out.join("manifest.json").exists());

    let header = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,c_1,norm_h,norm_v"), "schema: {}", &header[..40]);

    // same seed twice: byte-identical trajectory file
    let out2 = tmp.path().join("run2");
    let status = run(bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--emit-trajectory", "--out"])
        .arg(&out2));
    assert!(status.status.success());
    let a = std::fs::read(out.join("trajectory.csv")).unwrap();
    let b = std::fs::read(out2.join("trajectory.csv")).unwrap();
    assert_eq!(a, b, "trajectories must be byte-identical for equal seeds");

    // different seed differs
    let out3 = tmp.path().join("run3");
    let status = run(bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--emit-trajectory", "--seed", "99", "--out"])
        .arg(&out3));
    assert!(status.status.success());
    let c = std::fs::read(out3.join("trajectory.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn malformed_config_exits_two_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model\nname = \"gbm\"");
    let output = run(bin().args(["simulate", "--config"]).arg(&cfg));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("config error"), "{stderr}");

    // unknown key is also a config error
    let cfg2 = write_config(
        tmp.path(),
        "[model]\nname = \"gbm\"\nturbo = true\n\n[run]\nseed = 1\n",
    );
    let output = run(bin().args(["simulate", "--config"]).arg(&cfg2));
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("turbo"), "{stderr}");
}

#[test]
fn converge_identity_tails_pass_and_report_summarizes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("reports");
    let cfg = write_config(tmp.path(), &gbm_config(&out));

    let conv = run(bin().args(["converge", "--config"]).arg(&cfg));
    assert_eq!(conv.status.code(), Some(0), "{conv:?}");
    assert!(out.join("convergence.json").exists());
    assert!(out.join("convergence.csv").exists());
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("m,error,stderr,n_effective"));

    let ident = run(bin().args(["identity", "--config"]).arg(&cfg));
    assert_eq!(ident.status.code(), Some(0), "{ident:?}");

    let tails = run(bin()
        .args(["tails", "--config"])
        .arg(&cfg)
        .args(["--seed", "7"]));
    assert_eq!(tails.status.code(), Some(0), "{tails:?}");

    let report = run(bin().args(["report", "--out"]).arg(&out));
    assert_eq!(report.status.code(), Some(0), "{report:?}");
    let stdout = String::from_utf8_lossy(&report.stdout);
    assert!(stdout.contains("convergence.json: PASS"), "{stdout}");
    assert!(stdout.contains("identity.json: PASS"), "{stdout}");
}

#[test]
fn probe_runs_on_the_shipped_presets() {
    let presets = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    let tmp = tempfile::tempdir().unwrap();
    for preset in ["heat.toml", "plaplace.toml"] {
        let out = run(bin()
            .args(["probe", "--config"])
            .arg(presets.join(preset))
            .args(["--out"])
            .arg(tmp.path().join(preset.trim_end_matches(".toml"))));
        assert_eq!(out.status.code(), Some(0), "{preset}: {out:?}");
    }
}

#[test]
fn verdict_failure_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    // an impossible reduction demand forces a verdict failure
    let cfg_text =
        gbm_config(&out).replace("reduction_factor = 1.5", "reduction_factor = 1000000000.0");
    let cfg = write_config(tmp.path(), &cfg_text);
    let output = run(bin().args(["converge", "--config"]).arg(&cfg));
    assert_eq!(output.status.code(), Some(1), "{output:?}");
}

#[test]
fn guards_and_skeleton_commands_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let body = format!(
        "{}\n[study]\nguards = [8.0, 2.0]\n\n[control]\nkind = \"constant\"\nvalues = [0.3]\n",
        gbm_config(&out)
    );
    let cfg = write_config(tmp.path(), &body);
    let guards = run(bin().args(["guards", "--config"]).arg(&cfg));
    assert_eq!(guards.status.code(), Some(0), "{guards:?}");
    assert!(out.join("guards.json").exists());

    let skel = run(bin().args(["skeleton", "--config"]).arg(&cfg).args(["--paths", "30"]));
    assert_eq!(skel.status.code(), Some(0), "{skel:?}");
    assert!(out.join("skeleton.json").exists());
}
