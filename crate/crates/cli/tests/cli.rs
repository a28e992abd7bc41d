use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gammakde(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gammakde"));
    cmd.env_remove("GAMMAKDE_OUT").args(args);
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn config(dir: &Path, json: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bandwidths_prints_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gammakde(&["bandwidths", "--n", "2000"], Some(tmp.path()));
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["b_plugin"].as_f64().unwrap() - 0.1004).abs() < 0.002);
    assert!(tmp.path().join("bandwidths.json").exists());
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"n": 10, "grid": {"min": 0.0, "max": 1.0, "points": 5}}"#,
    );
    let out = gammakde(&["--config", &cfg, "reproduce"], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(2));
    let missing = gammakde(&["--config", "/nonexistent/x.json", "bandwidths"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn divergent_theory_integrals_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"n": 100, "distribution": {"kind": "chi_square", "m": 4}}"#,
    );
    let out = gammakde(&["--config", &cfg, "bandwidths"], Some(tmp.path()));
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn failed_mode_writes_partial_results_and_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"n": 100, "replications": 2, "distribution": {"kind": "chi_square", "m": 4},
            "grid": {"min": 0.1, "max": 8.0, "points": 20},
            "bandwidth_modes": ["refined", {"fixed": 0.3}]}"#,
    );
    let out = gammakde(&["--config", &cfg, "reproduce"], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(4));
    let report = fs::read_to_string(tmp.path().join("report.json")).unwrap();
    assert!(report.contains("\"refined\"") && report.contains("failures"));
    assert!(tmp.path().join("curve_fixed_0.3.csv").exists());
    assert!(!tmp.path().join("curve_refined.csv").exists());
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_gammakde"))
        .env("GAMMAKDE_OUT", tmp.path())
        .args(["bandwidths", "--n", "500"])
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(tmp.path().join("bandwidths.json").exists());
}

#[test]
fn single_replication_lemma_run_flags_variance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"n": 1, "lemmas": {"x_list": [1.0, 1.5], "b": 0.05, "n": 2000, "replications": 1}}"#,
    );
    let out = gammakde(&["--config", &cfg, "verify-lemmas"], Some(tmp.path()));
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("variance undefined"));
    let json = fs::read_to_string(tmp.path().join("lemmas_0.json")).unwrap();
    assert!(json.contains("\"variance_defined\": false"));
}

#[test]
fn small_reproduce_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gammakde(
        &[
            "--seed",
            "4",
            "--jobs",
            "2",
            "reproduce",
            "--n",
            "200",
            "--replications",
            "3",
        ],
        Some(tmp.path()),
    );
    assert!(out.status.success());
    let dir = tmp.path().join("n200");
    for f in [
        "report.json",
        "bandwidths.json",
        "curve_plugin.csv",
        "curve_chen.csv",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("published"));
}

#[test]
fn converge_rejects_short_size_list() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"n": 1, "convergence": {"n_list": [100, 200], "replications": 2}}"#,
    );
    let out = gammakde(&["--config", &cfg, "converge"], Some(tmp.path()));
    assert_eq!(out.status.code(), Some(2));
}
