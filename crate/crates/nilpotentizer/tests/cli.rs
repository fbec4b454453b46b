use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilpotentizer"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn shipped_scenarios_parse() {
    for name in ["grushin2", "grushin3", "heisenberg", "martinet", "euclidean", "single_field"] {
        let text = std::fs::read_to_string(scenario(name)).unwrap();
        let c = nilpotentizer::cli::parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(c.structure.dim_m() >= 2);
    }
    let g = nilpotentizer::cli::parse_config(&std::fs::read_to_string(scenario("grushin2")).unwrap()).unwrap();
    assert_eq!(g.structure.dim_m(), 2);
    assert_eq!(g.structure.depth(), 2);
}

#[test]
fn validate_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["grushin2", "heisenberg"] {
        let out = dir.path().join(name);
        let o = run(&["validate", "--config", &scenario(name)], &out);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let r = report(&out);
        assert_eq!(r["status"], "ok");
        assert_eq!(r["inputs_hash"].as_str().unwrap().len(), 64);
        assert!(out.join("tables/hormander.csv").exists());
    }
    let out = dir.path().join("single");
    let o = run(&["validate", "--config", &scenario("single_field")], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Hormander"));
}

#[test]
fn config_errors_exit_two_with_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"structure": {"dim": 2, "depth": 2, "generators": [
            {"weight": 0, "components": ["1", "0"]},
            {"weight": 1, "components": ["0", "x0^"]}]}}"#,
    )
    .unwrap();
    let o = run(&["validate", "--config", bad.to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/structure/generators/0/weight"), "{err}");
    assert!(err.contains("/structure/generators/1/components/1"), "{err}");

    let o = run(&["validate", "--config", "/nonexistent.json"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["cones", "--config", &scenario("grushin2"), "--path", "nowhere"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["distance", "--config", &scenario("grushin2"), "--t", "-1"], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cones_reports_grushin_limits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = run(&["cones", "--config", &scenario("grushin2")], &out);
    assert_eq!(o.status.code(), Some(0));
    let r = report(&out);
    let limits = r["outputs"]["limits"].as_array().unwrap();
    let basis = |name: &str| -> Vec<f64> {
        let l = limits.iter().find(|l| l["path"] == name).unwrap();
        l["basis"][0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let line = basis("line");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((line[1].abs() - s).abs() < 1e-6 && (line[2].abs() - s).abs() < 1e-6);
    assert!(line[1] * line[2] < 0.0);
    let sq = basis("sqrt");
    assert!((sq[2].abs() - 1.0).abs() < 1e-6);
    assert!(out.join("tables/cones_line.csv").exists());
}

#[test]
fn distance_is_deterministic_and_scales() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = |t: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = run(&["distance", "--config", &scenario("grushin2"), "--t", t, "--seed", "4", "--jobs", "2"], &out);
        assert_eq!(o.status.code(), Some(0));
        report(&out)["outputs"]["distances"].clone()
    };
    let a = outputs("1", "a");
    let b = outputs("1", "b");
    assert_eq!(a, b);
    let d1 = a[0]["distance"].as_f64().unwrap();
    assert!((d1 - 1.0).abs() < 1e-3);
    let half = outputs("0.5", "c");
    assert_eq!(half[0]["distance"].as_f64().unwrap(), d1 / 0.5);
}

#[test]
fn euclidean_quasinorm_is_scaled_displacement() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    let o = run(&["quasinorm", "--config", &scenario("euclidean")], &out);
    assert_eq!(o.status.code(), Some(0));
    let q = report(&out)["outputs"]["quasinorms"][0]["quasinorm"].as_f64().unwrap();
    assert!((q - 0.5 / 0.5).abs() < 1e-6);
}

#[test]
fn euclidean_gh_study_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = run(&["gh", "--config", &scenario("euclidean")], &out);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("tables/gh_line.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,D,gap,net_size,gh_bound"));
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|&d| d <= 1e-6));
}
