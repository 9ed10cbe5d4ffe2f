use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const FILES: [&str; 3] = ["trajectory.csv", "lyapunov.csv", "certificate.json"];

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn switchnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchnet"))
        .args(args)
        .env_remove("SWITCHNET_OUT_DIR")
        .output()
        .unwrap()
}

fn run_into(name: &str, out: &Path, extra: &[&str]) -> Output {
    let path = scenario(name);
    let mut args = vec!["run", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    switchnet(&args)
}

fn certificate(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap()
}

#[test]
fn repeated_runs_write_identical_bytes() {
    for name in ["hk.toml", "hk_01.toml", "nn_async.toml", "stackelberg_ex1.toml"] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        assert_eq!(run_into(name, a.path(), &[]).status.code(), Some(0), "{name}");
        assert_eq!(run_into(name, b.path(), &[]).status.code(), Some(0), "{name}");
        for f in FILES {
            let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
            assert!(!x.is_empty());
            assert_eq!(x, y, "{name}/{f}");
        }
    }
}

#[test]
fn hk_run_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_into("hk.toml", dir.path(), &[]).status.code(), Some(0));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        traj,
        "t,agent,coord_0\n0,0,0.0\n0,1,0.5\n0,2,2.0\n1,0,0.25\n1,1,0.25\n1,2,2.0\n2,0,0.25\n2,1,0.25\n2,2,2.0\n"
    );
    let lyap = std::fs::read_to_string(dir.path().join("lyapunov.csv")).unwrap();
    assert!(lyap.starts_with("t,value\n0,-4.5\n1,-5.0\n"), "{lyap}");

    let cert = certificate(dir.path());
    assert_eq!(cert["status"], "converged");
    assert_eq!(cert["stochastic"], false);
    let checks = cert["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["monotone", "drift", "freeze", "geometric_rate"]);
}

#[test]
fn seed_flag_changes_stochastic_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_into("nn_sync.toml", a.path(), &["--seed", "1"]);
    run_into("nn_sync.toml", b.path(), &["--seed", "2"]);
    assert_eq!(certificate(a.path())["seed"], 1);
    assert_eq!(certificate(a.path())["stochastic"], true);
    let read = |d: &Path| std::fs::read(d.join("trajectory.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into("hk_01.toml", dir.path(), &["--max-iters", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let cert = certificate(dir.path());
    assert_eq!(cert["status"], "max_iters");
    assert_eq!(cert["iterations"], 3);
}

#[test]
fn out_dir_defaults_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let path = scenario("hk.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_switchnet"))
        .args(["run", path.to_str().unwrap()])
        .env("SWITCHNET_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in FILES {
        assert!(target.join(f).is_file(), "{f}");
    }
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("nn_async.toml")).unwrap().replace("0.8, 0.3", "1.0, 0.3");
    std::fs::write(&bad, text).unwrap();
    let out = switchnet(&["run", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("params.mu[2]: μ must lie in (0,1)"), "{stderr}");

    assert_eq!(switchnet(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(switchnet(&["oracle-check", "--n", "9"]).status.code(), Some(1));
}

#[test]
fn verify_reports_bounds() {
    let path = scenario("nn_sync.toml");
    let out = switchnet(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let bound = &report["bounds"][0];
    assert_eq!(bound["name"], "time_bound");
    assert!(bound["measured"].as_f64().unwrap() <= bound["limit"].as_f64().unwrap());

    let path = scenario("hk_restricted.toml");
    let report: Value = serde_json::from_slice(&switchnet(&["verify", path.to_str().unwrap()]).stdout).unwrap();
    let names: Vec<&str> = report["bounds"].as_array().unwrap().iter().map(|b| b["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["geometric_rate"]);
}

#[test]
fn oracle_check_agrees() {
    let out = switchnet(&["oracle-check", "--n", "5", "--instances", "40", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["instances"], 40);
    for k in ["hk_mismatches", "nn_mismatches", "mst_mismatches"] {
        assert_eq!(report[k], 0);
    }
}
