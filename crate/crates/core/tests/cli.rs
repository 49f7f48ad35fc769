//! End-to-end checks of the `degel` binary: exit codes, artifacts, and
//! byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn degel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_degel"))
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("exp.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn exact_check_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = exact-check\nn = 65\noperator = trace\np = 2\nq = 3\na = power:1\nsource = exact\nboundary = exact\nclaim.sup_error = 5e-2\n",
    );
    let out = dir.path().join("results");
    let output = degel()
        .args(["exact-check", "--config", &cfg, "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("sup_error="), "{stdout}");
    assert!(out.join("solution.csv").exists());
    assert!(out.join("summary.csv").exists());
    // every printed summary value appears in the csv
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    for line in stdout.lines().filter(|l| l.contains('=') && !l.starts_with("CLAIM")) {
        let (name, value) = line.split_once('=').unwrap();
        assert!(
            summary.contains(&format!("{name},{value}")),
            "summary.csv missing `{name},{value}`"
        );
    }
}

#[test]
fn precondition_violations_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // barrier root with a vanishing source floor
    let cfg = write_config(dir.path(), "experiment = barrier-root\nbarrier.m = 0\n");
    let output = degel()
        .args(["barrier-root", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("positive"), "{stderr}");
}

#[test]
fn parse_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = solve\nn = 128\n");
    let output = degel()
        .args(["solve", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line 2") && stderr.contains("odd"), "{stderr}");
}

#[test]
fn failed_claim_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = exponent\nsampling = analytic\nn = 65\np = 2\nradii = 4h:0.25\nclaim.slope_max = 0.1\n",
    );
    let output = degel()
        .args(["exponent", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("CLAIM-FAILED"), "{stdout}");
}

#[test]
fn subcommand_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment = solve\n");
    let output = degel().args(["recession", "--config", &cfg]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn identical_config_and_seed_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = recession\nmmom.m = 3\nmmom.sigma = 1,1\n",
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = degel()
            .args(["recession", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "11"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["recession.csv", "summary.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn shipped_configs_parse() {
    let config_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(config_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("cfg") {
            let text = fs::read_to_string(&path).unwrap();
            degel::config::parse_config(&text)
                .unwrap_or_else(|e| panic!("{} failed to parse: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 8, "expected the shipped config set, found {count}");
}

#[test]
fn quick_shipped_pipelines_run() {
    // the cheap shipped configs run end to end with their declared claims
    let config_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in [
        "barrier_root.cfg",
        "recession.cfg",
        "solve_basic.cfg",
        "obstacle.cfg",
        "exponent_analytic.cfg",
    ] {
        let dir = tempfile::tempdir().unwrap();
        let text = fs::read_to_string(config_dir.join(name)).unwrap();
        let cfg = write_config(dir.path(), &text);
        let sub = text
            .lines()
            .find_map(|l| l.trim().strip_prefix("experiment = "))
            .unwrap()
            .trim()
            .to_string();
        let output = degel()
            .args([&sub, "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{name}: {}\n{}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
    }
}
