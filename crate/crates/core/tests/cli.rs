use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn qem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qem")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn strip_timing(mut v: Value) -> Value {
    let obj = v.as_object_mut().unwrap();
    obj.remove("started_unix_ms");
    obj.remove("wall_clock_s");
    v
}

#[test]
fn list_prints_experiments() {
    let out = qem(&["list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["ascent", "sharp-rate", "misspecified-pipeline", "perturbed-envelope"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&qem(&["run", "no-such-experiment"])), 2);
    assert_eq!(code(&qem(&["--bogus-flag", "list"])), 2);
    assert_eq!(code(&qem(&["run"])), 2);
    assert_eq!(code(&qem(&["frobnicate"])), 2);
    assert_eq!(code(&qem(&["run", "sharp-rate", "--override", "no_such_key=1"])), 2);
    assert_eq!(code(&qem(&["run", "sharp-rate", "--override", "separation"])), 2);
    assert_eq!(code(&qem(&["run", "sharp-rate", "--config", "/nonexistent/qem.cfg"])), 2);
    assert_eq!(code(&qem(&["bounds", "no-such-bound"])), 2);
    assert_eq!(code(&qem(&["bounds", "perturbed-envelope", "--override", "gamma=1.5"])), 2);
}

#[test]
fn failing_check_exits_1_and_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = qem(&["run", "sharp-rate", "--override", "rate_tol=0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sharp-rate/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], Value::Bool(false));
    assert_eq!(report["config"]["rate_tol"], Value::String("0".into()));
}

#[test]
fn run_is_deterministic_modulo_timestamps() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = qem(&["run", "ascent", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
    let read = |d: &tempfile::TempDir| -> Value { serde_json::from_str(&fs::read_to_string(d.path().join("ascent/report.json")).unwrap()).unwrap() };
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra["schema"], Value::from(1));
    assert_eq!(strip_timing(ra.clone()), strip_timing(rb));
    for artifact in ra["artifacts"].as_array().unwrap() {
        let name = artifact.as_str().unwrap();
        let fa = fs::read(a.path().join("ascent").join(name)).unwrap();
        assert_eq!(fa, fs::read(b.path().join("ascent").join(name)).unwrap(), "{name}");
        assert!(String::from_utf8(fa).unwrap().starts_with("t,phi,"));
    }
}

#[test]
fn config_file_and_seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# shorter run\nseed = 11\nhorizon = 20\n").unwrap();
    let out_dir = dir.path().join("out");
    let args = ["run", "sharpness-equality", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
    assert_eq!(code(&qem(&args)), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("sharpness-equality/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], Value::from(11));
    assert_eq!(report["config"]["horizon"], Value::String("20".into()));
    assert_eq!(report["bounds"][0]["measured"].as_array().unwrap().len(), 21);

    let mut with_seed = args.to_vec();
    with_seed.extend(["--seed", "3"]);
    assert_eq!(code(&qem(&with_seed)), 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("sharpness-equality/report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], Value::from(3));
}

#[test]
fn gen_data_is_byte_reproducible() {
    let args = ["gen-data", "--seed", "5", "--override", "model.d=2", "--override", "data.theta=1,0", "--override", "data.n=50"];
    let (a, b) = (qem(&args), qem(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("w,x1,x2\n"));
    assert_eq!(text.lines().count(), 51);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/point.csv");
    let out = qem(&["gen-data", "--override", "data.design=point", "--override", "data.point=0.25", "--override", "data.n=1", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let loaded = quotient_em::dataset::load_csv(&path).unwrap().dataset;
    assert_eq!(loaded.points(), &[vec![0.25]]);
    assert_eq!(loaded.weights(), &[1.0]);
    assert_eq!(code(&qem(&["gen-data", "--override", "model.kind=nope"])), 2);
}

#[test]
fn bounds_prints_full_precision_json() {
    let out = qem(&["bounds", "perturbed-envelope", "--override", "gamma=0.5", "--override", "delta=0.1", "--override", "e0=0", "--override", "horizon=3"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let bound: Vec<f64> = v["bound"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let closed = [0.0, 0.1, 0.15, 0.175];
    assert_eq!(bound.len(), 4);
    assert!(bound.iter().zip(closed).all(|(b, c)| (b - c).abs() <= 1e-15), "{bound:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("0.0000000000000000e0"));
}
