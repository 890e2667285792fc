use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qres")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// The single error line on stderr, parsed.
fn error_line(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let line = text.lines().last().unwrap();
    serde_json::from_str(line).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn validate_reports_deviation_table() {
    let v = stdout_json(&qres(&["validate", "--t-end", "20"]));
    assert_eq!(v["ok"], true);
    assert_eq!(v["points"], 1);
    assert_eq!(v["deviation"]["kappa"].as_array().unwrap().len(), 3);
    assert!(v["deviation"]["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nb1 = \"one\"\n");
    let e = error_line(&qres(&["--config", &cfg, "validate"]));
    assert_eq!(e["error"], "config");
    assert!(!e["message"].as_str().unwrap().is_empty());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nb3 = 1.0\n");
    let e = error_line(&qres(&["--config", &cfg, "rates"]));
    assert_eq!(e["error"], "config");
}

#[test]
fn missing_config_file() {
    let e = error_line(&qres(&["--config", "/nonexistent/cfg.toml", "rates"]));
    assert!(e["message"].as_str().unwrap().contains("/nonexistent/cfg.toml"));
}

#[test]
fn figure_number_out_of_range_is_a_usage_error() {
    let e = error_line(&qres(&["figure", "9"]));
    assert_eq!(e["error"], "usage");
}

#[test]
fn figure_writes_series_summary_and_script() {
    let dir = tempfile::tempdir().unwrap();
    let out = qres(&["figure", "1", "--out", dir.path().to_str().unwrap(), "--format", "plot"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed: Vec<String> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(listed.len(), 3 + 2);
    for p in &listed {
        assert!(Path::new(p).is_file(), "{p}");
    }
    assert!(dir.path().join("fig1_k0.1_n0_l0.csv").is_file());
    assert!(dir.path().join("fig1_plot.py").is_file());
    let summary = fs::read_to_string(dir.path().join("fig1_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 3);
}

#[test]
fn figure_protocol_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[sweep]\nkappa = [0.02]\nlambda = [0.001]\n");
    let e = error_line(&qres(&["--config", &cfg, "figure", "1"]));
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("figure 1"));
}

#[test]
fn concurrence_recomputes_the_series_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(qres(&["figure", "1", "--out", d]).status.success());
    let series = dir.path().join("fig1_k0.1_n0_l0.csv");
    let out = qres(&["concurrence", "--input", series.to_str().unwrap(), "--kappa-max", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_path(&series).unwrap();
    let col = rd.headers().unwrap().iter().position(|h| h == "concurrence").unwrap();
    let want: Vec<f64> = rd.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,concurrence,min_xi,max_imag,artifact");
    let got: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12, "{g} vs {w}");
    }
}

#[test]
fn rates_and_bounds_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[couplings]\nlambda1 = 0.01\nlambda2 = 0.01\nmu1 = 0.01\nmu2 = 0.01\nkappa1 = 0.02\nkappa2 = 0.02\n",
    );
    let r = stdout_json(&qres(&["--config", &cfg, "rates"]));
    let point = &r["points"][0];
    assert!(point["rates"]["gamma_th"].as_f64().unwrap() > 0.0);
    assert!(point["validity_horizons"]["gamma_th"].as_f64().unwrap() > 0.0);
    let b = stdout_json(&qres(&["--config", &cfg, "bounds"]));
    let t_a = b[0]["bounds"]["t_a"].as_f64().unwrap();
    let t_b = b[0]["bounds"]["t_b"].as_f64().unwrap();
    assert!(t_a.is_finite() && t_b.is_finite());
}

#[test]
fn bounds_precondition_failure() {
    // no exchange coupling: delta2 = delta3 = 0
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[couplings]\nkappa1 = 0.02\nkappa2 = 0.02\n");
    let e = error_line(&qres(&["--config", &cfg, "bounds"]));
    assert_eq!(e["error"], "bounds_precondition");
}

#[test]
fn sweep_table_sorted_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sweep]\nkappa = [0.05, 0.02]\nlambda = [0.001, 0.0]\n[time]\nn_points = 200\n",
    );
    let d = dir.path().join("out");
    let run = || {
        let out = qres(&["--config", &cfg, "--out", d.to_str().unwrap(), "sweep"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(d.join("series_sweep.csv")).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    let labels: Vec<&str> = first.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        labels,
        ["k0.02_n0_l0", "k0.02_n0_l0.001", "k0.05_n0_l0", "k0.05_n0_l0.001"]
    );
}

#[test]
fn sweep_without_lists_fails() {
    let e = error_line(&qres(&["sweep"]));
    assert_eq!(e["error"], "config");
}

#[test]
fn evolve_writes_one_file_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[couplings]\nkappa1 = 0.05\nkappa2 = 0.05\n[sweep]\nnu = [0.0, 0.01]\n[time]\nn_points = 100\n",
    );
    let d = dir.path().join("out");
    let out = qres(&["--config", &cfg, "--out", d.to_str().unwrap(), "evolve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("series_k0.05_n0_l0.csv").is_file());
    assert!(d.join("series_k0.05_n0.01_l0.csv").is_file());
    let text = fs::read_to_string(d.join("series_k0.05_n0_l0.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
}
