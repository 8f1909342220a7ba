//! End-to-end pipeline behavior: artifact determinism, formats, and the
//! config-driven task dispatch.

use std::fs;
use std::path::Path;

use cvkit::config::ExperimentConfig;
use cvkit::experiment::{self, export_grid};
use cvkit::io;
use cvkit::Error;

fn tiny_ae_config() -> ExperimentConfig {
    ExperimentConfig::from_json_str(
        r#"{
            "potential": {"kind": "quadratic_ou"},
            "beta": 1.0,
            "sampling": {"dt": 0.01, "n_steps": 4000, "stride": 2, "seed": 5},
            "task": "train_ae",
            "architecture": {"encoder": [2, 6, 1], "decoder": [1, 6, 2]},
            "training": {"lr": 0.01, "batch_size": 512, "epochs": 8, "seed": 42}
        }"#,
    )
    .unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn identical_configs_produce_identical_artifacts() {
    let cfg = tiny_ae_config();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(d1.path()), true).unwrap();
    experiment::run(&cfg, Some(d2.path()), true).unwrap();
    for name in [
        "config.json",
        "dataset.csv",
        "dataset_meta.json",
        "metrics.json",
        "model_encoder.json",
        "model_decoder.json",
        "grid_encoder.csv",
        "decoder_curve.csv",
    ] {
        assert_eq!(
            read(&d1.path().join(name)),
            read(&d2.path().join(name)),
            "artifact {name} differs between identical runs"
        );
    }
}

#[test]
fn config_echo_matches_input() {
    let cfg = tiny_ae_config();
    let dir = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(dir.path()), true).unwrap();
    let echoed = fs::read_to_string(dir.path().join("config.json")).unwrap();
    assert_eq!(echoed, cfg.to_json_pretty());
}

#[test]
fn metrics_length_equals_epochs_and_penalty_nonnegative() {
    let cfg = tiny_ae_config();
    let dir = tempfile::tempdir().unwrap();
    let summary = experiment::run(&cfg, Some(dir.path()), true).unwrap();
    assert_eq!(summary.metrics.len(), 8);
    assert!(summary.metrics.iter().all(|m| m.penalty >= 0.0));
    let text = fs::read_to_string(dir.path().join("metrics.json")).unwrap();
    let parsed: Vec<io::EpochMetrics> = serde_json::from_str(&text).unwrap();
    assert_eq!(parsed.len(), 8);
}

#[test]
fn checkpoints_reload_and_reproduce_outputs() {
    let cfg = tiny_ae_config();
    let dir = tempfile::tempdir().unwrap();
    let summary = experiment::run(&cfg, Some(dir.path()), true).unwrap();
    let enc = io::load_model(&dir.path().join("model_encoder.json")).unwrap();
    for x in [[0.3, -0.8], [1.5, 0.4]] {
        assert_eq!(
            enc.forward(&x)[0].to_bits(),
            summary.models[0].forward(&x)[0].to_bits()
        );
    }
}

#[test]
fn grid_export_shape_and_decoder_curve_length() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    export_grid(&path, |x| vec![x[0] + x[1]], [[0.0, 1.0], [0.0, 1.0]], [11, 7]).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,x2,v");
    assert_eq!(lines.len(), 1 + 11 * 7);

    let cfg = tiny_ae_config();
    let run_dir = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(run_dir.path()), true).unwrap();
    let curve = fs::read_to_string(run_dir.path().join("decoder_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 256);
    assert_eq!(curve.lines().next().unwrap(), "z,y1,y2");
}

#[test]
fn simulate_only_writes_dataset() {
    let cfg = tiny_ae_config();
    let dir = tempfile::tempdir().unwrap();
    experiment::simulate_only(&cfg, Some(dir.path())).unwrap();
    let (points, meta) = io::read_dataset(dir.path()).unwrap();
    assert_eq!(points.len(), 2000);
    assert_eq!(meta.stride, 2);
    assert!(!dir.path().join("metrics.json").exists());
}

#[test]
fn oracle_report_task_produces_spectra() {
    let cfg = ExperimentConfig::from_json_str(
        r#"{
            "potential": {"kind": "quadratic_ou"},
            "beta": 1.0,
            "sampling": {"dt": 0.005, "n_steps": 40000, "stride": 2, "seed": 9},
            "task": "oracle_report",
            "oracle": {"grid": [61, 61], "n_eigs": 3, "ulam_bins": [12, 12], "tau": 0.5}
        }"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(dir.path()), true).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle_report.json")).unwrap())
            .unwrap();
    let eigs = report["eigenvalues"].as_array().unwrap();
    assert_eq!(eigs.len(), 3);
    assert!((eigs[1].as_f64().unwrap() - 1.0).abs() < 0.05);
    // Bridge between the Ulam and grid spectra.
    let gap = report["ulam"]["bridge_gap"].as_f64().unwrap();
    assert!(gap < 0.1, "bridge gap {gap}");
    assert!(dir.path().join("eigen_grid.csv").exists());
    assert!(dir.path().join("ulam.csv").exists());
}

#[test]
fn mep_task_exports_path() {
    let cfg = ExperimentConfig::from_json_str(
        r#"{
            "potential": {"kind": "example1", "epsilon": 0.5},
            "beta": 4.0,
            "sampling": {"dt": 0.005, "n_steps": 10, "stride": 1, "seed": 1},
            "task": "mep",
            "mep": {"a": [-1.0, 0.0], "b": [1.0, 0.0]}
        }"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(dir.path()), true).unwrap();
    let text = fs::read_to_string(dir.path().join("path.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 50);
    assert_eq!(text.lines().nth(1).unwrap(), "-1,0");
}

#[test]
fn evaluate_task_consumes_checkpoints() {
    let cfg = tiny_ae_config();
    let train_dir = tempfile::tempdir().unwrap();
    experiment::run(&cfg, Some(train_dir.path()), true).unwrap();
    let eval_cfg = ExperimentConfig::from_json_str(&format!(
        r#"{{
            "potential": {{"kind": "quadratic_ou"}},
            "beta": 1.0,
            "sampling": {{"dt": 0.01, "n_steps": 4000, "stride": 2, "seed": 5}},
            "task": "evaluate",
            "evaluate": {{
                "encoder": "{}",
                "decoder": "{}",
                "tau": 0.1,
                "moment_bins": 6
            }}
        }}"#,
        train_dir.path().join("model_encoder.json").display(),
        train_dir.path().join("model_decoder.json").display()
    ))
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    experiment::run(&eval_cfg, Some(dir.path()), true).unwrap();
    assert!(dir.path().join("grid_encoder.csv").exists());
    assert!(dir.path().join("decoder_curve.csv").exists());
    let moments = fs::read_to_string(dir.path().join("conditional_moments.csv")).unwrap();
    assert!(moments.lines().count() > 1);
}

#[test]
fn error_exit_codes_distinguish_config_from_numerics() {
    assert_eq!(Error::InvalidConfig("x".into()).exit_code(), 2);
    assert_eq!(Error::InvalidData("x".into()).exit_code(), 2);
    assert_eq!(
        Error::Diverged {
            step: 1,
            threshold: 1e6
        }
        .exit_code(),
        3
    );
    assert_eq!(Error::ConvergenceFailure("x".into()).exit_code(), 3);

    // A step size far past the stability limit surfaces as a numerical
    // failure from the full pipeline.
    let mut cfg = tiny_ae_config();
    cfg.potential = cvkit::potentials::Potential::example1();
    cfg.beta = 4.0;
    cfg.sampling.dt = 10.0;
    cfg.sampling.x0 = Some([3.0, 3.0]);
    let dir = tempfile::tempdir().unwrap();
    let e = experiment::run(&cfg, Some(dir.path()), true).unwrap_err();
    assert_eq!(e.exit_code(), 3);
}
