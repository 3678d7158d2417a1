use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use perf_dro::cli::{exit_code, EXIT_DIVERGENCE};
use perf_dro::config::DataSpec;
use perf_dro::{emit_outputs, run_experiment, ExperimentConfig, ExperimentKind};
use perfdro_core::Error;

fn perf_dro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perf-dro")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL_STRATEGIC: &str = r#"{"experiment": "strategic", "trials": 2, "n_train": 300, "eps_true_points": 3,
    "eta_list": [0.0, 0.5], "rho_list": [0.0, 0.01, 0.05], "data": {"source": "synthetic", "n": 1000}}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write_config(dir.path(), "bad.json", "{ not json");
    let unknown = write_config(dir.path(), "unknown.json", r#"{"experiment": "toy", "bogus": 1}"#);
    let zero = write_config(dir.path(), "zero.json", r#"{"experiment": "toy", "trials": 0}"#);
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("out");
    for cfg in [&bad_json, &unknown, &zero, &missing] {
        let o = perf_dro(&["experiment", "toy", "--config", s(cfg), "--out", s(&out)]);
        assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = perf_dro(&["solve-po", "--config", s(&bad_json)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibration_method_must_fit_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.json", r#"{"experiment": "toy"}"#);
    for method in ["post-fit", "cal-set", "four-fifth"] {
        let o = perf_dro(&["calibrate", "--method", method, "--config", s(&cfg)]);
        assert_eq!(o.status.code(), Some(2), "{method}");
    }
}

#[test]
fn divergence_maps_to_three() {
    let err = anyhow::Error::new(Error::Divergence { iteration: 4 });
    assert_eq!(exit_code(&err), EXIT_DIVERGENCE);
}

#[test]
fn solve_commands_write_solution_and_reduce_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SMALL_STRATEGIC);
    let po_dir = dir.path().join("po");
    let o = perf_dro(&["solve-po", "--config", s(&cfg), "--out", s(&po_dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(po_dir.join("trace.csv").exists());
    let po: serde_json::Value = serde_json::from_slice(&fs::read(po_dir.join("solution.json")).unwrap()).unwrap();

    let dr_dir = dir.path().join("dr");
    let o = perf_dro(&["solve-drpo", "--config", s(&cfg), "--rho", "0", "--out", s(&dr_dir)]);
    assert!(o.status.success());
    let dr: serde_json::Value = serde_json::from_slice(&fs::read(dr_dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(po["theta"], dr["theta"]);

    let o = perf_dro(&["solve-tpo", "--config", s(&cfg), "--alpha", "1.5"]);
    assert!(o.status.success());
    let tp: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((tp["mu_star"].as_f64().unwrap() - 1.0 / 1.5).abs() < 1e-12);
}

#[test]
fn calibration_commands_select_from_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.json", SMALL_STRATEGIC);
    let out = dir.path().join("cal");
    let o = perf_dro(&["calibrate", "--method", "cal-set", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(out.join("calibration.json")).unwrap()).unwrap();
    assert!([0.0, 0.01, 0.05].contains(&r["selected"].as_f64().unwrap()));
    assert_eq!(fs::read_to_string(out.join("calibration.csv")).unwrap().lines().count(), 4);

    let fair = write_config(
        dir.path(),
        "f.json",
        r#"{"experiment": "fairness", "alpha_list": [0.0, 2.0], "fairness": {"n": 800, "n_eval": 500}}"#,
    );
    let o = perf_dro(&["calibrate", "--method", "four-fifth", "--config", s(&fair)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!([0.0, 2.0].contains(&r["selected"].as_f64().unwrap()));
}

#[test]
fn overrides_change_trial_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "toy.json", r#"{"experiment": "toy", "rho_list": [0.0, 0.125], "toy": {"n_atoms": 2000}}"#);
    let out = dir.path().join("out");
    let o = perf_dro(&["experiment", "toy", "--config", s(&cfg), "--out", s(&out), "--trials", "3", "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("results.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 3 * 2);
    assert!(out.join("toy_theta.svg").exists());
}

fn small(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig {
        experiment: kind,
        trials: 2,
        n_train: 300,
        eps_true_points: 3,
        eta_list: vec![0.0, 0.5],
        rho_list: vec![0.0, 0.01],
        alpha_list: vec![0.0, 1.0],
        data: DataSpec::Synthetic { n: 1000, seed: None },
        ..ExperimentConfig::default()
    }
}

#[test]
fn row_count_matches_sweep_shape() {
    for kind in [ExperimentKind::Strategic, ExperimentKind::Location] {
        let cfg = small(kind);
        let r = run_experiment(&cfg).unwrap();
        let grid = 1 + if kind == ExperimentKind::Strategic { cfg.rho_list.len() } else { cfg.alpha_list.len() };
        assert_eq!(r.cells.len(), cfg.trials * grid * cfg.eta_list.len() * cfg.eps_true_points, "{kind}");
        assert!(r.failures.is_empty());
    }
}

#[test]
fn emitted_files_are_deterministic() {
    let r = run_experiment(&small(ExperimentKind::Strategic)).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit_outputs(&r, a.path()).unwrap();
    let fb = emit_outputs(&r, b.path()).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    let results = fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), r.cells.len() + 1);
    assert!(a.path().join("aggregate.csv").exists());
    assert!(a.path().join("pr_true_eta1.svg").exists());
}

#[test]
fn csv_data_source_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,c,label\n");
    for i in 0..60 {
        let x = (i as f64 * 0.37).sin();
        let y = (i as f64 * 0.91).cos();
        csv.push_str(&format!("{x},{y},{},{}\n", x * y, u8::from(x + 0.5 * y > 0.0)));
    }
    fs::write(dir.path().join("d.csv"), csv).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": "strategic", "trials": 1, "n_train": 60, "eps_true_points": 2, "eta_list": [0.5],
            "rho_list": [0.01], "data": {"source": "csv", "path": "d.csv", "feature_columns": ["a", "b", "c"],
            "label_column": "label", "strategic_mask": [true, false, false]}}"#,
    );
    let out = dir.path().join("out");
    let o = perf_dro(&["experiment", "strategic", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("results.csv")).unwrap().lines().count(), 1 + 2 * 2);
}
