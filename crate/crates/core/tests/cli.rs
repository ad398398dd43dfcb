use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnimc-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small_config(solver: Value, acceptance: Value) -> Value {
    json!({
        "name": "tiny",
        "dims": {"n1": 100, "n2": 100, "d1": 6, "d2": 6, "r": 2},
        "kappas": [2.0],
        "sample_sizes": [{"rho": 3.0}],
        "solvers": [solver],
        "num_seeds": 3,
        "base_seed": 5,
        "write_traces": true,
        "acceptance": acceptance,
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bench_succeeds_and_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        json!({"solver": "gnimc", "config": {}}),
        json!({"solver": "gnimc", "target": 1e-4, "min_success_fraction": 1.0}),
    );
    let path = write(dir.path(), "c.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = bench(&["bench", "--config", &path, "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let runs = std::fs::read_to_string(out_dir.join("tiny/runs.csv")).unwrap();
    assert!(runs.starts_with("config_hash,"));
    assert_eq!(runs.lines().count(), 4);
    assert!(out_dir.join("tiny/summary.csv").exists());
    let traces = std::fs::read_dir(out_dir.join("tiny/gnimc")).unwrap().count();
    assert_eq!(traces, 3);
}

#[test]
fn missed_acceptance_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // No double-precision run reaches 1e-30.
    let cfg = small_config(
        json!({"solver": "gnimc", "config": {}}),
        json!({"solver": "gnimc", "target": 1e-30, "min_success_fraction": 1.0}),
    );
    let path = write(dir.path(), "c.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = bench(&["bench", "--config", &path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn diverging_run_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        json!({"solver": "gd", "config": {"max_outer_iters": 200}, "step": {"fixed": 1e6}}),
        Value::Null,
    );
    let path = write(dir.path(), "c.json", &cfg);
    let out_dir = dir.path().join("out");
    let out = bench(&["bench", "--config", &path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(json!({"solver": "gnimc", "config": {}}), Value::Null);
    cfg["colour"] = json!("blue");
    let path = write(dir.path(), "bad.json", &cfg);
    let out = bench(&["bench", "--config", &path]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
    assert_eq!(code(&bench(&["bench"])), 1);
    assert_eq!(code(&bench(&["bench", "--preset", "no-such-preset"])), 1);
    let mut cfg = small_config(json!({"solver": "gnimc", "config": {}}), Value::Null);
    cfg["dims"]["r"] = json!(9);
    let path = write(dir.path(), "dims.json", &cfg);
    assert_eq!(code(&bench(&["bench", "--config", &path])), 1);
}

#[test]
fn generate_then_solve_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(json!({"solver": "gnimc", "config": {}}), Value::Null);
    let path = write(dir.path(), "c.json", &cfg);
    let out_dir = dir.path().join("gen");
    let out = bench(&["generate", "--config", &path, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let problem = std::fs::read_dir(&out_dir).unwrap().next().unwrap().unwrap().path();
    let problem = problem.to_str().unwrap();
    for solver in ["gnimc", "altmin"] {
        let out = bench(&["solve", "--problem", problem, "--solver", solver, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{solver}: {}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8_lossy(&out.stdout);
        let rmse: f64 = stdout
            .split("rel-RMSE ")
            .nth(1)
            .and_then(|s| s.split(',').next())
            .and_then(|s| s.parse().ok())
            .expect("rel-RMSE printed");
        assert!(rmse < 1e-8, "{solver}: {stdout}");
    }
    let traces = std::fs::read_dir(&out_dir).unwrap().filter(|e| {
        e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")
    });
    assert_eq!(traces.count(), 2);
    let out = bench(&["solve", "--problem", problem, "--solver", "newton"]);
    assert_eq!(code(&out), 1);
}
