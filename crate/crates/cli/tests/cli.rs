use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use serde_json::{json, Value};
use tempfile::TempDir;

use dimwit_cli::analysis::Stage;
use dimwit_cli::config::RunConfig;
use dimwit_cli::stage_report;
use dimwit_core::retro::{saturating_strategies, LpConfig};

fn dimwit(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dimwit"));
    cmd.args(args).env_remove("DIMWIT_LP_MAX_PIVOTS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn run_json(cmd: &str, config: &Path) -> Value {
    let out = dimwit(&[cmd, "--config", config.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn exit_code(cmd: &str, config: &Path) -> Option<i32> {
    dimwit(&[cmd, "--config", config.to_str().unwrap()], &[]).status.code()
}

fn wheeler() -> Value {
    json!({"experiment": {"mode": "wheeler", "phi": [0.0, PI, -FRAC_PI_2, FRAC_PI_2]}})
}

fn det_settings() -> Value {
    json!({"experiment": {"mode": "modified", "phi": [0.0, PI, -FRAC_PI_2, FRAC_PI_2], "sigma": [FRAC_PI_2, 0.0]}})
}

fn idw_settings() -> Value {
    json!({"experiment": {"mode": "modified", "phi": [FRAC_PI_4, 3.0 * FRAC_PI_4, -FRAC_PI_2], "sigma": [FRAC_PI_2, 0.0]}})
}

fn with(mut base: Value, key: &str, v: Value) -> Value {
    base[key] = v;
    base
}

fn approx(v: &Value, expected: f64, tol: f64) {
    let x = v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"));
    assert!((x - expected).abs() <= tol, "{x} vs {expected}");
}

#[test]
fn simulate_wheeler_table() {
    let dir = TempDir::new().unwrap();
    let report = run_json("simulate", &write(&dir, "c.json", &wheeler()));
    let table = &report["results"]["wheeler-stats"]["table"];
    for d in 0..2 {
        for x in 0..4 {
            assert_eq!(table[d][x][0], json!(0.5));
        }
    }
    assert_eq!(table[1][1][1], json!(1.0));
    assert_eq!(table[0][2][1], json!(0.5));
    assert!(report["metadata"]["convention"].as_str().unwrap().contains("detector E"));
    assert_eq!(report["metadata"]["experiment"]["eta"], json!(1.0));
}

#[test]
fn simulate_quantum_control_marginal() {
    let dir = TempDir::new().unwrap();
    let c = json!({"experiment": {"mode": "quantum-control", "phi": [0.0], "alpha": FRAC_PI_4}, "analysis": ["qdce-stats", "hv-qdce"]});
    let report = run_json("simulate", &write(&dir, "c.json", &c));
    approx(&report["results"]["qdce-stats"]["setting_marginal"][0][1], 0.5, 1e-12);
    approx(&report["results"]["hv-qdce"]["max_abs_diff_to_quantum"], 0.0, 1e-12);
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    let out = dimwit(&["simulate", "--config", empty.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("experiment"));
    assert_eq!(dimwit(&["simulate"], &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(exit_code("witness", &missing), Some(2));
    assert_eq!(exit_code("simulate", &write(&dir, "u.json", &with(wheeler(), "colour", json!(1)))), Some(2));
    assert_eq!(exit_code("simulate", &write(&dir, "a.json", &with(wheeler(), "analysis", json!(["chsh"])))), Some(2));
}

#[test]
fn mode_and_scenario_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let qdce_on_wheeler = with(wheeler(), "analysis", json!(["qdce-stats"]));
    assert_eq!(exit_code("simulate", &write(&dir, "a.json", &qdce_on_wheeler)), Some(3));
    let qc = json!({"experiment": {"mode": "quantum-control", "phi": [0.0], "alpha": 0.3}});
    assert_eq!(exit_code("witness", &write(&dir, "b.json", &qc)), Some(3));
    let detw_too_small = with(idw_settings(), "analysis", json!(["detw"]));
    assert_eq!(exit_code("witness", &write(&dir, "c.json", &detw_too_small)), Some(3));
}

#[test]
fn determinant_witness_reports() {
    let dir = TempDir::new().unwrap();
    let modified = run_json("witness", &write(&dir, "m.json", &with(det_settings(), "analysis", json!(["detw"]))));
    approx(&modified["results"]["detw"]["value"], 1.0, 1e-10);
    assert_eq!(modified["results"]["detw"]["violated"], json!(true));
    let open_closed = run_json("witness", &write(&dir, "w.json", &with(wheeler(), "analysis", json!(["detw"]))));
    approx(&open_closed["results"]["detw"]["value"], 0.0, 1e-10);
    assert_eq!(open_closed["results"]["detw"]["violated"], json!(false));
}

#[test]
fn linear_witness_and_membership() {
    let dir = TempDir::new().unwrap();
    let c = with(idw_settings(), "analysis", json!(["idw", "membership"]));
    let r = run_json("witness", &write(&dir, "c.json", &c));
    approx(&r["results"]["idw"]["value"], 1.0 + 2.0 * 2f64.sqrt(), 1e-10);
    assert_eq!(r["results"]["idw"]["classical_bound"], json!(3.0));
    assert_eq!(r["results"]["membership"]["result"], json!("outside"));
    let w = run_json("witness", &write(&dir, "w.json", &with(wheeler(), "analysis", json!(["membership"]))));
    assert_eq!(w["results"]["membership"]["result"], json!("inside"));
}

#[test]
fn retro_reports() {
    let dir = TempDir::new().unwrap();
    let [first, _] = saturating_strategies();
    let strategy = json!({"behavior": {"table": first.behavior().to_nested()}});
    let r = run_json("retro", &write(&dir, "s.json", &strategy));
    approx(&r["results"]["retro-min"]["r_min"], 0.5, 1e-9);
    approx(&r["results"]["retro-min"]["idw"], 5.0, 1e-12);

    let uniform = json!({"behavior": {"table": vec![vec![vec![0.5; 2]; 3]; 2]}});
    let r = run_json("retro", &write(&dir, "u.json", &uniform));
    approx(&r["results"]["retro-min"]["r_min"], 0.0, 1e-9);

    let r = run_json("retro", &write(&dir, "q.json", &idw_settings()));
    let r_min = r["results"]["retro-min"]["r_min"].as_f64().unwrap();
    assert!(r_min >= 0.2071 - 1e-7, "{r_min}");
    let cert = r["results"]["retro-min"]["certificate"].as_array().unwrap();
    let total: f64 = cert.iter().map(|s| s["weight"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn retro_curve_points() {
    let dir = TempDir::new().unwrap();
    let c = json!({"behavior": {"table": vec![vec![vec![0.5; 2]; 3]; 2]}, "analysis": ["retro-curve"],
                   "retro_curve": {"values": [3.0, 4.0, 5.0]}});
    let r = run_json("retro", &write(&dir, "c.json", &c));
    let pts = r["results"]["retro-curve"].as_array().unwrap();
    assert_eq!(pts.len(), 3);
    for (p, expected) in pts.iter().zip([0.0, 0.25, 0.5]) {
        approx(&p["r_min"], expected, 1e-7);
        approx(&p["closed_form"], expected, 1e-12);
    }
}

#[test]
fn pivot_limit_from_environment() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "q.json", &idw_settings());
    let args = ["retro", "--config", path.to_str().unwrap()];
    assert_eq!(dimwit(&args, &[("DIMWIT_LP_MAX_PIVOTS", "1")]).status.code(), Some(4));
    assert_eq!(dimwit(&args, &[("DIMWIT_LP_MAX_PIVOTS", "lots")]).status.code(), Some(2));
    assert_eq!(dimwit(&args, &[("DIMWIT_LP_MAX_PIVOTS", "100000")]).status.code(), Some(0));
}

#[test]
fn verify_filters() {
    let out = dimwit(&["verify", "--filter", "detw-null"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS detw-null"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 1);

    let out = dimwit(&["verify", "--filter", "detw", "--format", "json"], &[]);
    let checks: Vec<Value> = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<_> = checks.iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec!["detw-null", "detw-violation", "detw-efficiency"]);
    // The efficiency check asserts linear scaling; the determinant scales
    // quadratically, so it fails and verify exits 1.
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(dimwit(&["verify", "--filter", "no-such-check"], &[]).status.code(), Some(2));
}

fn sweep_csv(dir: &TempDir, config: &Value) -> Vec<Vec<String>> {
    let path = write(dir, "sweep.json", config);
    let out = dimwit(&["sweep", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn efficiency_sweep() {
    let dir = TempDir::new().unwrap();
    let c = with(det_settings(), "sweep", json!({"eta": {"start": 0.05, "stop": 1.0, "step": 0.05}}));
    let rows = sweep_csv(&dir, &c);
    assert_eq!(rows[0], vec!["eta", "detw", "idw", "retro_min"]);
    assert_eq!(rows.len(), 21);
    for (i, row) in rows[1..].iter().enumerate() {
        let eta: f64 = row[0].parse().unwrap();
        assert!((eta - 0.05 * (i + 1) as f64).abs() < 1e-12);
        let detw: f64 = row[1].parse().unwrap();
        assert!((detw - eta * eta).abs() < 1e-10, "eta {eta}: {detw}");
    }
}

#[test]
fn transmittance_sweep_and_column_order() {
    let dir = TempDir::new().unwrap();
    let mut c = with(det_settings(), "sweep", json!({"t_a": {"start": 0.1, "stop": 1.0, "step": 0.1}, "eta": {"values": [1.0]}}));
    c["experiment"]["t_b"] = json!(1.0);
    let rows = sweep_csv(&dir, &c);
    assert_eq!(rows[0], vec!["eta", "t_a", "detw", "idw", "retro_min"]);
    assert_eq!(rows.len(), 11);
    for row in &rows[1..] {
        let t_a: f64 = row[1].parse().unwrap();
        let detw: f64 = row[2].parse().unwrap();
        assert!((detw - t_a * t_a).abs() < 1e-10);
    }
}

#[test]
fn sweep_errors() {
    let dir = TempDir::new().unwrap();
    for sweep in [
        json!({"eta": {"start": 1.0, "stop": 0.5, "step": 0.1}}),
        json!({"eta": {"start": 0.1, "stop": 0.5, "step": 0.0}}),
        json!({"eta": {"values": []}}),
        json!({"eta": {"start": 0.1}}),
        json!({}),
        json!({"eta": {"values": [0.0]}}),
        json!({"phi_9": {"values": [0.0]}}),
    ] {
        let path = write(&dir, "s.json", &with(det_settings(), "sweep", sweep.clone()));
        assert_eq!(exit_code("sweep", &path), Some(2), "{sweep}");
    }
    assert_eq!(exit_code("sweep", &write(&dir, "n.json", &det_settings())), Some(2));
    let qc = json!({"experiment": {"mode": "quantum-control", "phi": [0.0], "alpha": 0.3}, "sweep": {"alpha": {"values": [0.1]}}});
    assert_eq!(exit_code("sweep", &write(&dir, "q.json", &qc)), Some(3));
}

#[test]
fn sweep_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let c = with(idw_settings(), "sweep", json!({"phi_0": {"start": 0.0, "stop": 3.0, "step": 0.25}, "t_b": {"values": [0.5, 1.0]}}));
    let path = write(&dir, "s.json", &c);
    let a = dimwit(&["sweep", "--config", path.to_str().unwrap()], &[]).stdout;
    let b = dimwit(&["sweep", "--config", path.to_str().unwrap()], &[]).stdout;
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 13 * 2);
}

#[test]
fn csv_and_out_flags() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "c.json", &with(det_settings(), "analysis", json!(["detw"])));
    let out_path = dir.path().join("report.csv");
    let out = dimwit(
        &["witness", "--config", path.to_str().unwrap(), "--format", "csv", "--out", out_path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(out_path).unwrap();
    assert!(text.starts_with("analysis,field,value\n"));
    assert!(text.contains("detw,value,1.0\n"));
}

fn witness_values(report: &Value) -> Vec<u64> {
    ["detw", "idw"]
        .iter()
        .filter_map(|w| report["results"][w]["value"].as_f64())
        .map(f64::to_bits)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulate_witness_round_trip(
        phi in proptest::collection::vec(-PI..PI, 4),
        sigma in proptest::collection::vec(-PI..PI, 2),
        t_a in 0.1f64..=1.0,
        eta in 0.1f64..=1.0,
    ) {
        let dir = TempDir::new().unwrap();
        let config = json!({"experiment": {"mode": "modified", "phi": phi, "sigma": sigma, "t_a": t_a, "eta": eta}});
        let sim = run_json("simulate", &write(&dir, "sim.json", &config));
        let from_file = json!({"behavior": sim["behavior"].clone()});
        let via_file = run_json("witness", &write(&dir, "wit.json", &from_file));

        let parsed = RunConfig::parse(&config.to_string()).unwrap();
        let in_process = stage_report(Stage::Witness, &parsed, LpConfig::default()).unwrap();
        prop_assert_eq!(witness_values(&via_file), witness_values(&in_process));
        prop_assert_eq!(witness_values(&in_process).len(), 2);
        prop_assert_eq!(
            serde_json::to_string(&via_file["results"]).unwrap(),
            serde_json::to_string(&in_process["results"]).unwrap()
        );
    }
}
