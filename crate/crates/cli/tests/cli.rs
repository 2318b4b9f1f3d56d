use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn chenflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chenflow"))
        .args(args)
        .output()
        .expect("spawn chenflow")
}

fn chenflow_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chenflow"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn chenflow")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn error_kind(out: &Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line");
    let v: Value = serde_json::from_str(line).expect("stderr is json");
    v["error"]["kind"].as_str().expect("kind").to_string()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_circle_to_one_eighth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"curve_spec": {"shape": {"kind": "circle", "omega": 1, "radius": 1.0}, "n": 64},
            "step": {"t_final": 0.125, "record_every": 20},
            "output_dir": "out"}"#,
    );
    let out = chenflow_in(tmp.path(), &["run", "-c", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/summary.json")).unwrap())
            .unwrap();
    let t = summary["t"].as_f64().unwrap();
    assert!((t - 0.125).abs() < 1e-3, "t = {t}");
    assert!(tmp.path().join("out/trajectory.csv").exists());
}

#[test]
fn negative_step_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"curve_spec": {"shape": {"kind": "circle", "omega": 1, "radius": 1.0}, "n": 64},
            "step": {"delta_sigma": -1e-4, "max_steps": 10},
            "output_dir": "out"}"#,
    );
    let out = chenflow_in(tmp.path(), &["run", "-c", &cfg]);
    assert_eq!(code(&out), 2);
    assert_eq!(error_kind(&out), "invalid_config");
}

#[test]
fn missing_config_is_usage_error() {
    let out = chenflow(&["run", "-c", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 2);
    error_kind(&out);
}

#[test]
fn eoc_rejects_non_doubling() {
    let out = chenflow(&["eoc", "--n", "16,48"]);
    assert_eq!(code(&out), 2);
    error_kind(&out);
}

#[test]
fn eoc_small_table() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = chenflow(&["eoc", "--n", "16,32", "--json", "-o", dir]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((rows[0]["error"].as_f64().unwrap() / 4.6963e-3 - 1.0).abs() < 1e-3);
    assert!(tmp.path().join("eoc.csv").exists());
}

#[test]
fn unknown_suite_and_subcommand() {
    let out = chenflow(&["theory-check", "--suite", "nonsense"]);
    assert_eq!(code(&out), 2);
    error_kind(&out);
    let out = chenflow(&["frobnicate"]);
    assert_eq!(code(&out), 2);
    assert_eq!(error_kind(&out), "usage");
}

#[test]
fn cheap_suites_pass() {
    for suite in ["cocompact", "q-monotone"] {
        let out = chenflow(&["theory-check", "--suite", suite, "--json"]);
        assert_eq!(code(&out), 0, "{suite}: {}", String::from_utf8_lossy(&out.stdout));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 1);
    }
}

#[test]
fn rescale_needs_closed_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"curve_spec": {"shape": {"kind": "cocompact_graph", "amplitude": 0.02, "frequency": 1}, "n": 64},
            "step": {"max_steps": 20, "record_every": 5},
            "output_dir": "out", "emit_frames": true}"#,
    );
    let out = chenflow_in(tmp.path(), &["run", "-c", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = chenflow(&["rescale", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(error_kind(&out), "not_applicable");
}

#[test]
fn rescale_shrinking_circle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"curve_spec": {"shape": {"kind": "circle", "omega": 1, "radius": 1.0}, "n": 64},
            "step": {"t_final": 0.2, "record_every": 20},
            "output_dir": "out", "emit_frames": true}"#,
    );
    assert_eq!(code(&chenflow_in(tmp.path(), &["run", "-c", &cfg])), 0);
    let out = chenflow(&["rescale", tmp.path().join("out").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let t_hat = v["extinction_time"].as_f64().unwrap();
    assert!((t_hat - 0.25).abs() < 5e-3, "T = {t_hat}");
    assert!(tmp.path().join("out/rescaled/rescale.csv").exists());
}
