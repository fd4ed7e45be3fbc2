//! End-to-end runs of the `erl` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn erl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn policy_limit_is_deterministic_with_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"temperatures": [0.1, 0.001], "q_learning_steps": 5000}"#);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = erl(&["policy-limit", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["policies.csv", "tv.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(header(&a.join("policies.csv")), "tau,sigma,method,state,action,prob");
    assert_eq!(header(&a.join("tv.csv")), "tau,method,sup_tv_to_pistarref");
}

#[test]
fn return_dist_and_occupancy_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"temperatures": [0.1, 0.001], "n_control": 50, "n_eval": 50, "oracle_rollouts": 20000}"#,
    );
    let out = dir.path().join("out");
    let o = erl(&["return-dist", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out.join("distributions.csv")), "tau,sigma,method,state,action,atom,prob");
    assert_eq!(header(&out.join("summary.csv")), "tau,sigma,method,state,w1_to_oracle,clipped_mass");
    let o = erl(&["occupancy-limit", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(header(&out.join("occupancy.csv")), "tau,state,action,mass,regularizer,flow_residual");
}

#[test]
fn properties_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = erl(&["properties", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let report = fs::read(a.join("report.json")).unwrap();
    assert_eq!(report, fs::read(b.join("report.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn config_and_input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(dir.path(), r#"{"temperatures": []}"#);
    assert_eq!(erl(&["policy-limit", "--config", &empty]).status.code(), Some(2));
    assert_eq!(erl(&["validate", "--builtin", "nope"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n_states": 1, "n_actions": 1, "gamma": 1.5, "reward": [[0]], "transition": [[[1]]]}"#).unwrap();
    let o = erl(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/gamma"));
    assert!(erl(&["validate", "--builtin", "mean-tie"]).status.success());
}
