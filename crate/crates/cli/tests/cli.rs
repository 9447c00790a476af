//! End-to-end checks of the installed binary: exit codes, output
//! determinism, format switching.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdinew"))
}

fn scratch(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("mdinew-cli-test-{}-{name}", std::process::id()));
    p
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "expected success, got {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn list_scenarios_names_all_six() {
    let out = run_ok(&["list-scenarios"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "reduction-check",
        "separable-positivity",
        "loophole-sweep",
        "mc-events",
        "noise-sweep",
        "new-vs-ew",
    ] {
        assert!(text.contains(name), "missing scenario {name} in:\n{text}");
    }
}

#[test]
fn run_emits_csv_to_stdout() {
    let cfg = write_config("stdout.cfg", "scenario = reduction-check\ntrials = 2\nseed = 3\n");
    let out = run_ok(&["run", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mdi_linear,witness_scaled,dev_linear,mdi_nonlinear,nonlinear_scaled,dev_nonlinear,seed,trial"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn same_seed_gives_byte_identical_files_and_seed_flag_overrides() {
    let cfg = write_config(
        "det.cfg",
        "scenario = separable-positivity\ntrials = 5\nseed = 11\neffects = random\n",
    );
    let out_a = scratch("det-a.csv");
    let out_b = scratch("det-b.csv");
    let out_c = scratch("det-c.csv");
    let c = cfg.to_str().unwrap();
    run_ok(&["run", "--config", c, "--out", out_a.to_str().unwrap()]);
    run_ok(&["run", "--config", c, "--out", out_b.to_str().unwrap()]);
    run_ok(&["run", "--config", c, "--seed", "12", "--out", out_c.to_str().unwrap()]);
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    let c = std::fs::read(&out_c).unwrap();
    assert_eq!(a, b, "same seed must reproduce bytes");
    assert_ne!(a, c, "a different seed must change the records");
}

#[test]
fn json_format_mirrors_columns() {
    let cfg = write_config("json.cfg", "scenario = reduction-check\ntrials = 1\nseed = 3\n");
    let out = run_ok(&["run", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("[\n"));
    assert!(text.trim_end().ends_with(']'));
    assert!(text.contains("\"mdi_linear\": "));
    assert!(text.contains("\"trial\": 0"));
}

#[test]
fn validate_accepts_good_and_rejects_bad_configs() {
    let good = write_config("good.cfg", "scenario = loophole-sweep\neta_minus = 0.8:1.0:3\n");
    let out = run_ok(&["validate", "--config", good.to_str().unwrap()]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "ok");

    let unknown_key = write_config("badkey.cfg", "scenario = loophole-sweep\nbogus = 1\n");
    assert_eq!(exit_code(&["validate", "--config", unknown_key.to_str().unwrap()]), 1);

    let bad_scenario = write_config("badscen.cfg", "scenario = nope\n");
    assert_eq!(exit_code(&["validate", "--config", bad_scenario.to_str().unwrap()]), 1);

    let bad_eta = write_config("badeta.cfg", "scenario = loophole-sweep\neta_minus = 1.5\n");
    assert_eq!(exit_code(&["validate", "--config", bad_eta.to_str().unwrap()]), 1);
}

#[test]
fn io_failures_exit_with_two() {
    assert_eq!(exit_code(&["validate", "--config", "/nonexistent/path.cfg"]), 2);
    let cfg = write_config("iofail.cfg", "scenario = reduction-check\ntrials = 1\n");
    assert_eq!(
        exit_code(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "/nonexistent/dir/out.csv"
        ]),
        2
    );
}
