use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seplogit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn complete_csv(dir: &Path) -> String {
    let mut s = String::from("z,y\n");
    for z in [10, 20, 30, 40] {
        s.push_str(&format!("{z},1\n"));
    }
    for z in [60, 70, 80, 90] {
        s.push_str(&format!("{z},0\n"));
    }
    write(dir, "complete.csv", &s).display().to_string()
}

fn quasi_csv(dir: &Path) -> String {
    let mut s = String::from("z,y\n");
    for z in [10, 20, 30, 40, 50] {
        s.push_str(&format!("{z},1\n"));
    }
    for z in [50, 60, 70, 80, 90] {
        s.push_str(&format!("{z},0\n"));
    }
    write(dir, "quasi.csv", &s).display().to_string()
}

fn overlap_csv(dir: &Path) -> String {
    let body = "z,y\n1,0\n2,1\n3,0\n4,1\n5,0\n6,1\n7,1\n8,0\n9,1\n10,1\n";
    write(dir, "overlap.csv", body).display().to_string()
}

#[test]
fn detect_exit_codes_follow_the_separation_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["detect", &complete_csv(dir.path()), "--format", "json"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["kind"], "complete");
    let b: Vec<f64> = v["direction"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((b[0] / b[1] + 50.0).abs() < 1e-6);

    let out = run(&["detect", &quasi_csv(dir.path()), "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["problematic"].as_array().unwrap().len(), 8);

    let out = run(&["detect", &overlap_csv(dir.path()), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kind"], "none");
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv").display().to_string();
    let out = run(&["detect", &missing]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

fn intervals(path: &str, alpha: &str) -> Vec<(f64, f64)> {
    let out = run(&["infer", path, "--alpha", alpha, "--format", "json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    json(&out)["intervals"]["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["lower"].as_f64().unwrap(), r["upper"].as_f64().unwrap()))
        .collect()
}

#[test]
fn infer_rows_and_alpha_nesting() {
    let dir = tempfile::tempdir().unwrap();
    let c = complete_csv(dir.path());
    let wide = intervals(&c, "0.05");
    let narrow = intervals(&c, "0.20");
    assert_eq!(wide.len(), 8);
    for ((wl, wu), (nl, nu)) in wide.iter().zip(&narrow) {
        assert!(*wl <= nl + 1e-8 && *nu <= wu + 1e-8);
    }
    let lens: Vec<f64> = wide.iter().map(|(l, u)| u - l).collect();
    let widest = lens.iter().cloned().fold(0.0, f64::max);
    assert!(
        widest - lens[3] <= 1e-9 && widest - lens[4] <= 1e-9,
        "{lens:?}"
    );

    let out = run(&["infer", &quasi_csv(dir.path()), "--format", "json"]);
    let v = json(&out);
    let sides: Vec<&str> = v["intervals"]["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["side"].as_str().unwrap())
        .collect();
    assert_eq!(sides.len(), 10);
    assert_eq!(sides.iter().filter(|s| **s == "two-sided").count(), 2);
}

#[test]
fn predict_midpoint_and_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let new = write(dir.path(), "new.csv", "z\n50\n5.5\n")
        .display()
        .to_string();
    let out = run(&[
        "predict",
        &complete_csv(dir.path()),
        "--new",
        &new,
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let first = &v["predictions"][0];
    assert!((first["pi_star"].as_f64().unwrap() - 0.5).abs() <= 1e-6);
    assert_eq!(first["fallback"], false);

    let out = run(&[
        "predict",
        &overlap_csv(dir.path()),
        "--new",
        &new,
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let r = &v["predictions"][1];
    assert_eq!(r["fallback"], true);
    assert_eq!(r["pi0"], r["pi_star"]);
}

#[test]
fn predict_names_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    let new = write(dir.path(), "new.csv", "w\n50\n")
        .display()
        .to_string();
    let out = run(&["predict", &complete_csv(dir.path()), "--new", &new]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains('z'));
}

fn bench_json(jobs: &str) -> Value {
    let out = run(&["bench", "--seed", "7", "--jobs", jobs, "--format", "json"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut v = json(&out);
    for row in v["rows"].as_array_mut().unwrap() {
        row["cost_seconds"] = Value::Null;
        row["inference_seconds"] = Value::Null;
    }
    v
}

#[test]
fn bench_is_deterministic_across_job_counts() {
    let one = bench_json("1");
    let four = bench_json("4");
    assert_eq!(one, four);
    assert_eq!(one["schema_version"], 1);
    assert_eq!(one["rows"].as_array().unwrap().len(), 12);
}

#[test]
fn bench_csv_agrees_with_json() {
    let v = bench_json("2");
    let out = run(&["bench", "--seed", "7", "--jobs", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let jrows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), jrows.len());
    for (r, j) in rows.iter().zip(jrows) {
        assert_eq!(&r[col("scenario")], j["scenario"].as_str().unwrap());
        assert_eq!(&r[col("method")], j["method"].as_str().unwrap());
        let acc: f64 = r[col("loocv_accuracy")].parse().unwrap();
        assert!((acc - j["loocv_accuracy"].as_f64().unwrap()).abs() <= 1e-9);
    }
}

#[test]
fn bench_skips_missing_external_files() {
    let out = run(&[
        "bench",
        "--scenario",
        "quadratic,endometrial",
        "--endometrial",
        "/nonexistent.csv",
        "--no-loocv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}
