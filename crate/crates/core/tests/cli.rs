use std::fs;

use gatefid::cli::run_cli;
use gatefid::experiment::{bounds_from_records, read_records_csv, run_ensemble, EnsembleKind, Estimator, ExperimentConfig};
use gatefid::{gate, GateName};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("gatefid").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn assert_json_error(err: &str, kind: &str) {
    assert_eq!(err.lines().count(), 1, "{err}");
    let v: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["kind"], kind);
    assert!(v["error"].is_string());
}

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&["run", "--qubits", "2", "--gate", "cnot", "--realizations", "200", "--seed", "7", "--out", out]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 201);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["realizations"], 200);
    assert_eq!(summary["config"]["seed"], 7);

    // The persisted records reproduce the in-memory summary.
    let cfg = ExperimentConfig::new(2, "cnot", EnsembleKind::RandomDynamicalMap).with_realizations(200).with_seed(7);
    let mem = run_ensemble(&cfg).unwrap();
    let disk = read_records_csv(csv.as_bytes()).unwrap();
    assert_eq!(mem, disk);
    let ests = [Estimator::Arith, Estimator::Lambda];
    let a = bounds_from_records(&mem, &ests, &cfg.histogram).unwrap();
    let b = bounds_from_records(&disk, &ests, &cfg.histogram).unwrap();
    for (x, y) in a.estimators.iter().zip(&b.estimators) {
        assert!((x.alpha - y.alpha).abs() <= 1e-12 && (x.beta - y.beta).abs() <= 1e-12);
    }
    assert_eq!(serde_json::to_value(&a).unwrap(), summary["summary"]);

    let records = dir.path().join("records.csv");
    let (code, stdout, _) = run(&["bounds", "--records", records.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["estimators"][0]["estimator"], "arith");
    assert!(v["estimators"][1]["alpha"].as_f64().unwrap() <= 1.0);

    let (code, stdout, _) = run(&["bounds", "--records", records.to_str().unwrap(), "--format", "markdown", "--estimator", "lambda"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("| estimator |") && stdout.contains("| lambda |") && !stdout.contains("| arith |"));

    let hist = dir.path().join("hist.csv");
    let (code, _, _) = run(&["hist", "--records", records.to_str().unwrap(), "--out", hist.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(hist).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn certify_and_fav_read_channel_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cnot.json");
    fs::write(&path, gate(GateName::Cnot).as_channel().to_json().unwrap()).unwrap();
    let p = path.to_str().unwrap();

    let (code, stdout, _) = run(&["certify", "--channel", p]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["is_unitary"], true);

    let (code, stdout, _) = run(&["fav", "--channel", p, "--gate", "cnot", "--samples", "1000"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!((v["f_av_exact"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((v["f_av_mc"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let (code, _, err) = run(&["fav", "--channel", p, "--gate", "toffoli"]);
    assert_eq!(code, 2);
    assert_json_error(&err, "invalid-dimension");

    fs::write(&path, "{\"rep\": \"unitary\"").unwrap();
    let (code, _, err) = run(&["certify", "--channel", p]);
    assert_eq!(code, 2);
    assert_json_error(&err, "parse");
}

#[test]
fn argument_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["run", "--out", out, "--ensemble", "nope"],
        vec!["run", "--out", out, "--realizations", "-3"],
        vec!["run", "--out", out, "--realizations", "0"],
        vec!["run", "--out", out, "--qubits", "3", "--gate", "cnot"],
        vec!["run", "--out", out, "--gate", "swap"],
        vec!["run", "--out", out, "--estimator", "median"],
        vec!["bounds"],
    ] {
        let (code, _, err) = run(&args);
        assert_eq!(code, 1, "{args:?}");
        assert_eq!(err.lines().count(), 1);
        let _: Value = serde_json::from_str(err.trim()).unwrap();
    }
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let (code, _, err) = run(&["bounds", "--records", missing.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_json_error(&err, "io");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "not,a,records,file\n").unwrap();
    let (code, _, err) = run(&["hist", "--records", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_json_error(&err, "parse");
}

#[test]
fn all_skipped_run_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, err) = run(&[
        "run", "--qubits", "1", "--gate", "identity", "--ensemble", "randomized-unitary", "--scale-max", "1e-12",
        "--realizations", "10", "--out", out,
    ]);
    assert_eq!(code, 0, "{err}");
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["summary"].is_null());
    let records = dir.path().join("records.csv");
    let (code, _, err) = run(&["bounds", "--records", records.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_json_error(&err, "empty-ensemble");
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, stdout, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("Usage"));
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&["run", "--help"]).0, 0);
}
