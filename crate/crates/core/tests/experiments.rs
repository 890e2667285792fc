mod common;

use std::fs;

use qres_core::experiments::{
    emit, figure_config, read_series_csv, run_figure, series_header, simulate_all, sweep, write_series_csv,
    ExperimentConfig, OutputFormat, TimeSeries,
};
use qres_core::rates::CouplingSet;

#[test]
fn identical_config_gives_identical_files() {
    let cfg = figure_config(3).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run_figure(3, &cfg).unwrap();
        emit(dir.path(), "fig3", &out.series, &out.summaries, OutputFormat::Plot).unwrap();
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4 + 2);
    for name in names {
        let x = fs::read(a.path().join(&name)).unwrap();
        let y = fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}

#[test]
fn series_csv_round_trip() {
    let mut cfg = ExperimentConfig::default();
    cfg.couplings = CouplingSet::symmetric(0.01, 0.01, 0.03, 0.01);
    cfg.time.n_points = 300;
    let ts = simulate_all(&cfg).unwrap().remove(0);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    write_series_csv(&path, &ts).unwrap();
    let back = read_series_csv(&path).unwrap();
    assert_eq!(back.len(), ts.rows.len());
    for (row, orig) in back.iter().zip(&ts.rows) {
        assert_eq!(row.t, orig.t);
        assert_eq!(row.rescaled_t, orig.rescaled_t);
        assert_eq!(row.concurrence, orig.concurrence);
        assert_eq!(row.min_eig, orig.min_eig);
        let rho = row.density_matrix().unwrap();
        for m in 1..=4 {
            for n in 1..=4 {
                assert_eq!(rho.get(m, n), orig.rho.get(m, n), "({m},{n})");
            }
        }
    }
}

#[test]
fn empty_series_gives_header_only() {
    let ts = TimeSeries {
        label: "empty".into(),
        couplings: CouplingSet::default(),
        rows: Vec::new(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    write_series_csv(&path, &ts).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim_end(), series_header().join(","));
    assert!(read_series_csv(&path).unwrap().is_empty());
}

#[test]
fn header_layout() {
    let h = series_header();
    assert_eq!(h.len(), 2 + 2 * 10 + 2);
    assert_eq!(&h[..4], ["t", "rescaled_t", "re_rho12", "im_rho12"]);
    assert_eq!(h[8], "re_rho23");
    assert_eq!(h[14], "re_rho11");
    assert_eq!(&h[22..], ["concurrence", "min_eig"]);
}

#[test]
fn plot_script_reads_only_emitted_files() {
    let out = run_figure(1, &figure_config(1).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit(dir.path(), "fig1", &out.series, &out.summaries, OutputFormat::Plot).unwrap();
    let script_path = written
        .iter()
        .find(|p| p.extension().is_some_and(|e| e == "py"))
        .unwrap();
    let script = fs::read_to_string(script_path).unwrap();
    let quoted: Vec<&str> = script
        .split('"')
        .skip(1)
        .step_by(2)
        .filter(|s| s.ends_with(".csv"))
        .collect();
    assert_eq!(quoted.len(), out.series.len());
    for name in quoted {
        assert!(dir.path().join(name).is_file(), "{name}");
        assert!(!name.contains("summary"));
    }
    // no inline data: the script is small whatever the series length
    assert!(script.lines().count() < 60);
}

#[test]
fn doubling_grid_changes_peak_little() {
    for n in [1u8, 4] {
        let cfg = figure_config(n).unwrap();
        let mut fine = cfg.clone();
        fine.time.n_points *= 2;
        let a = sweep(&cfg).unwrap();
        let b = sweep(&fine).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.label, y.label);
            assert!(
                (x.c_max - y.c_max).abs() < 1e-3,
                "{}: {} vs {}",
                x.label,
                x.c_max,
                y.c_max
            );
        }
    }
}

#[test]
fn one_point_sweep_matches_figure_summary() {
    let mut cfg = figure_config(1).unwrap();
    cfg.sweep.kappa = Some(vec![0.1]);
    let table = sweep(&cfg).unwrap();
    let fig = run_figure(1, &cfg).unwrap();
    assert_eq!(table, fig.summaries);
    assert_eq!(table.len(), 1);
}

#[test]
fn figure_one_rescaled_curves_collapse() {
    let out = run_figure(1, &figure_config(1).unwrap()).unwrap();
    assert_eq!(out.series.len(), 3);
    let spread = common::collapse_spread(&out.series, false, 4000);
    assert!(spread < 0.01, "{spread}");
}

#[test]
fn figure_three_normalized_curves_collapse() {
    let out = run_figure(3, &figure_config(3).unwrap()).unwrap();
    assert_eq!(out.series.len(), 4);
    let spread = common::collapse_spread(&out.series, true, 4000);
    assert!(spread < 0.05, "{spread}");
}

#[test]
fn exchange_coupling_lowers_the_peak() {
    let out = run_figure(4, &figure_config(4).unwrap()).unwrap();
    let peaks: Vec<f64> = out.summaries.iter().map(|s| s.c_max).collect();
    assert_eq!(peaks.len(), 5);
    for w in peaks.windows(2) {
        assert!(w[1] < w[0], "{peaks:?}");
    }
}

#[test]
fn time_shift_and_reliability_flags() {
    let out = run_figure(5, &figure_config(5).unwrap()).unwrap();
    for s in &out.summaries {
        let dt = s.delta_t.expect("lambda sweep fills the time shift");
        if s.lambda == 0.0 {
            assert_eq!(dt, 0.0);
        }
        assert_eq!(s.unreliable, s.c_max < 10.0 * 0.02 * 0.02);
    }
}
