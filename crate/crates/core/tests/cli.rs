use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagrangian-lab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_suite(dir: &Path) -> String {
    let p = dir.join("small.json");
    std::fs::write(
        &p,
        r#"{"schema": 1, "name": "small", "flows": [{"name": "rigid_rotation"}, {"name": "gerstner"}],
            "checks": [{"id": "jacobian_drift", "tolerance": 1e-9}], "grids": [8, 16]}"#,
    )
    .unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn flows_list_names_the_catalog() {
    let o = lab(&["flows", "list"]);
    assert!(o.status.success());
    for name in ["rigid_rotation", "gerstner", "point_vortex", "taylor_green"] {
        assert!(stdout(&o).contains(name), "{name} missing");
    }
}

#[test]
fn describe_prints_json() {
    let o = lab(&["flows", "describe", "gerstner"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["name"], "gerstner");
}

#[test]
fn unknown_flow_is_a_config_error() {
    assert_eq!(lab(&["flows", "describe", "nope"]).status.code(), Some(2));
    assert_eq!(lab(&["converge", "jacobian_drift", "nope", "--grids", "8,16"]).status.code(), Some(2));
}

#[test]
fn missing_config_is_an_io_error() {
    assert_eq!(lab(&["run", "/nonexistent/suite.json"]).status.code(), Some(3));
}

#[test]
fn run_writes_reports_and_identical_runs_diff_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_suite(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = lab(&["run", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    let rb = lab(&["run", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(rb.status.success());
    assert!(a.join("small.csv").exists() && a.join("plots").is_dir());

    let (ja, jb) = (a.join("small.json"), b.join("small.json"));
    let d = lab(&["report", "diff", ja.to_str().unwrap(), jb.to_str().unwrap()]);
    assert!(d.status.success(), "{}", stdout(&d));
}

#[test]
fn grid_and_flow_overrides_change_the_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_suite(dir.path());
    let o = lab(&["run", &cfg, "--grid", "12", "--flow", "gerstner"]);
    assert!(o.status.success());
    let rows: Vec<String> = stdout(&o).lines().filter(|l| l.starts_with("PASS")).map(String::from).collect();
    assert_eq!(rows.len(), 1, "{rows:?}");
    assert!(rows[0].contains("gerstner") && rows[0].contains("12"));
}

#[test]
fn converge_reports_an_order() {
    let o = lab(&["converge", "invariant_drift", "gerstner", "--grids", "16,32", "--finite-differences"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let order: f64 = out.lines().last().unwrap().trim_start_matches("order ").parse().unwrap();
    assert!((1.7..2.3).contains(&order), "{out}");
}
