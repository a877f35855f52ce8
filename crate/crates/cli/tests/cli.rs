use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use spopt_cli::output::TRACE_HEADER;

fn spopt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spopt"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn malformed_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"application": "target", "bogus": 1}"#);
    let out = spopt(&["target", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_application_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"application": "mor"}"#);
    let out = spopt(&["target", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_solver_option_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"solver": {"beta": 2.0}}"#);
    let out = spopt(&["sympev", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_scheme_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = spopt(&["target", "--schemes", "CayleyX"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = spopt(&["target", "--config", "does-not-exist.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_mor_grid_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"mor": {"model": "wave", "t_final": 1.0, "ht": 0.3}}"#);
    let out = spopt(&["mor", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn target_traces_match_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"target": {"presets": ["sum", "saddle"]}}"#);
    let out = spopt(&["target", "--config", &cfg, "--schemes", "SRE,CayleyC", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let summary: Value = serde_json::from_str(&fs::read_to_string(res.join("target_summary.json")).unwrap()).unwrap();
    let runs = summary.as_array().unwrap();
    assert_eq!(runs.len(), 4);
    for run in runs {
        let file = run["trace_file"].as_str().unwrap();
        let text = fs::read_to_string(res.join(file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let rows: Vec<&str> = lines.collect();
        let iterations = run["iterations"].as_u64().unwrap() as usize;
        assert_eq!(rows.len(), iterations + 1);
        let last: Vec<&str> = rows[rows.len() - 1].split(',').collect();
        assert_eq!(last[0].parse::<usize>().unwrap(), iterations);
        let (f, g) = (last[1].parse::<f64>().unwrap(), run["final_cost"].as_f64().unwrap());
        assert!((f - g).abs() <= 1e-15 * f.abs());
        assert_eq!(last[4].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn seed_flag_overrides_config_and_changes_artificial_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"target": {"presets": ["artificial"], "artificial_n": 4}, "seed": 1}"#);
    let run = |seed: &str, out: &str| {
        let o = spopt(&["target", "--config", &cfg, "--schemes", "SRE", "--seed", seed, "--out", out], dir.path());
        assert!(o.status.success());
        fs::read(dir.path().join(out).join("target_artificial_SRE.csv")).unwrap()
    };
    let a = run("7", "a");
    let b = run("7", "b");
    let c = run("8", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sympev_writes_values_without_timing_by_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"sympev": {"n": 20, "k": 3}}"#);
    let out = spopt(&["sympev", "--config", &cfg, "--schemes", "SRE", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    assert!(res.join("sympev_SRE.csv").exists());
    assert!(!res.join("sympev_timing.csv").exists());
    let values = fs::read_to_string(res.join("sympev_values.csv")).unwrap();
    assert_eq!(values.lines().count(), 1 + 3);
    for line in values.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let (d, t): (f64, f64) = (cols[2].parse().unwrap(), cols[3].parse().unwrap());
        assert!((d - t).abs() < 1e-8, "{line}");
    }
}

#[test]
fn small_wave_mor_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"mor": {"model": "wave", "n": 40, "t_final": 1.0, "ht": 0.05, "snapshots": 21, "ks": [4]}}"#,
    );
    let out = spopt(&["mor", "--config", &cfg, "--schemes", "SRE", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let errors = fs::read_to_string(res.join("mor_wave_errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 3);
    assert!(res.join("mor_wave_k4_SRE_trace.csv").exists());
    let series = fs::read_to_string(res.join("mor_wave_series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 2 * 21);
    let summary: Value = serde_json::from_str(&fs::read_to_string(res.join("mor_wave_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["fom_steps"], 20);
    assert!(summary["fom_energy_drift"].as_f64().unwrap() < 1e-10);
}
