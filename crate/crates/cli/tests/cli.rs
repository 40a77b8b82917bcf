//! End-to-end CLI tests: subcommands, exit codes, output determinism.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomic-recovery"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["norm", "tail", "solve", "certify", "width", "phase", "verify-bounds", "min-measure"] {
        assert!(text.contains(cmd), "help must list `{cmd}`");
    }
}

#[test]
fn norm_command_computes_l1() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("sig.csv");
    write(&sig, "3.0,-4.0\n");
    let out = bin()
        .args(["norm", "--atoms", "canonical:2", "--signal"])
        .arg(&sig)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "7");
}

#[test]
fn solve_command_recovers_and_writes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let y = dir.path().join("y.csv");
    let out_path = dir.path().join("zhat.csv");
    write(&a, "1.0,0.0,1.0\n0.0,1.0,1.0\n");
    write(&y, "2.0,0.0\n");
    let out = bin()
        .args(["solve", "--atoms", "canonical:3", "--operator"])
        .arg(&a)
        .arg("--y")
        .arg(&y)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("\"converged\": true"));
    let zhat = std::fs::read_to_string(&out_path).unwrap();
    let vals: Vec<f64> =
        zhat.trim().split(',').map(|t| t.trim().parse().unwrap()).collect();
    assert!((vals[0] - 2.0).abs() < 1e-4 && vals[1].abs() < 1e-4 && vals[2].abs() < 1e-4);
}

#[test]
fn certify_structural_property() {
    let out = bin()
        .args(["certify", "--atoms", "canonical:6", "--kind", "splittable", "--s", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("AnalyticTrue"));
}

#[test]
fn missing_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    write(&cfg, "experiment = phase\n"); // no set
    let out = bin().args(["phase", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    write(&cfg, "experiment = phase\nset.kind = canonical\nset.dim = 4\nm = 2\nwat = 1\n");
    let out = bin().args(["phase", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refused_experiment_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mm.conf");
    write(
        &cfg,
        "experiment = min-measure\nset.kind = canonical\nset.dim = 16\nm = 2..4\ns = 2\ntrials = 2\n",
    );
    let out = bin().args(["min-measure", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refused"));
}

#[test]
fn phase_csv_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("phase.conf");
    write(
        &cfg,
        "experiment = phase\nset.kind = canonical\nset.dim = 8\n\
         m = 2..6..2\ns = 1\ntrials = 5\nseed = 42\nformat = both\n",
    );
    let out1 = dir.path().join("w1");
    let out8 = dir.path().join("w8");
    let run = |out: &Path, workers: &str| {
        let st = bin()
            .args(["phase", "--config"])
            .arg(&cfg)
            .args(["--workers", workers, "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert!(st.status.success(), "stderr: {}", String::from_utf8_lossy(&st.stderr));
    };
    run(&out1, "1");
    run(&out8, "8");
    let csv1 = std::fs::read(out1.with_extension("csv")).unwrap();
    let csv8 = std::fs::read(out8.with_extension("csv")).unwrap();
    assert_eq!(csv1, csv8, "CSV bytes must not depend on the worker count");
    // summaries exist and carry the schema version
    let json = std::fs::read_to_string(out1.with_extension("json")).unwrap();
    assert!(json.contains("\"schema_version\": 1"));
}

#[test]
fn width_command_full_sphere() {
    let out = bin()
        .args([
            "width", "--atoms", "canonical:2", "--samples", "4000", "--seed", "1",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("width output is JSON");
    let mean = doc["mean"].as_f64().unwrap();
    // E|g|_2 in dimension 2 is sqrt(pi/2) = 1.2533
    assert!((mean - 1.2533).abs() < 0.1, "mean {mean}");
}
