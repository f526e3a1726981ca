use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rcla(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcla"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run rcla")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = rcla(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stdout(dir: &Path, args: &[&str]) -> String {
    let out = rcla(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_reduce_ph_bottleneck_roundtrip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let info = ok_json(
        dir,
        &["--seed", "7", "synth", "--kind", "circle", "--n", "300", "--r", "0.2", "--out", "noisy.csv", "--labels", "labels.txt"],
    );
    assert_eq!(info["n_shape"], 300);
    assert_eq!(info["n_noise"], 60);
    assert_eq!(fs::read_to_string(dir.join("labels.txt")).unwrap().lines().count(), 360);

    let reduced = ok_json(
        dir,
        &["reduce", "--in", "noisy.csv", "--delta", "0.05", "--k", "2", "--out", "reduced.csv"],
    );
    let sidecar: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("reduced.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n_out"], reduced["n_out"]);
    assert_eq!(sidecar["k"], 2);
    assert_eq!(
        sidecar["kept_cells"].as_array().unwrap().len() as u64,
        reduced["n_out"].as_u64().unwrap()
    );

    ok_json(dir, &["ph", "--in", "noisy.csv", "--out", "a.json", "--csv", "a.csv"]);
    ok_json(dir, &["ph", "--in", "reduced.csv", "--out", "b.json"]);
    let csv = fs::read_to_string(dir.join("a.csv")).unwrap();
    assert!(csv.starts_with("degree,birth,death"));

    let same: f64 = stdout(dir, &["bottleneck", "--a", "a.json", "--b", "a.json"]).trim().parse().unwrap();
    assert_eq!(same, 0.0);
    let d: f64 = stdout(dir, &["bottleneck", "--a", "a.json", "--b", "b.json", "--degree", "1"])
        .trim()
        .parse()
        .unwrap();
    assert!(d.is_finite() && d >= 0.0);
}

#[test]
fn same_seed_gives_same_cloud() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for name in ["x.csv", "y.csv"] {
        ok_json(dir, &["--seed", "3", "synth", "--kind", "two-circles", "--n", "100", "--r", "0.1", "--out", name]);
    }
    assert_eq!(fs::read(dir.join("x.csv")).unwrap(), fs::read(dir.join("y.csv")).unwrap());
}

#[test]
fn out_dir_prefixes_relative_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok_json(dir, &["--out-dir", "run/a", "synth", "--kind", "circle", "--n", "50", "--out", "pts.csv"]);
    assert!(dir.join("run/a/pts.csv").exists());
}

#[test]
fn features_have_header_and_drop_list() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok_json(dir, &["synth", "--kind", "circle", "--n", "80", "--out", "c.csv"]);
    ok_json(dir, &["ph", "--in", "c.csv", "--out", "d.json"]);
    ok_json(dir, &["features", "--in", "d.json", "--cap", "1.0", "--out", "f.csv"]);
    let text = fs::read_to_string(dir.join("f.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), 46);
    assert_eq!(lines[1].split(',').count(), 46);
    assert!(lines[0].starts_with("h0_birth_mean"));

    let info = ok_json(
        dir,
        &["features", "--in", "d.json", "--cap", "1.0", "--out", "g.csv", "--drop-stat", "life_q50", "--drop-stat", "total"],
    );
    assert_eq!(info["len"], 42);
    assert!(!fs::read_to_string(dir.join("g.csv")).unwrap().contains("h1_total"));
}

#[test]
fn certificate_reports_confidence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut counts = String::new();
    for i in 0..100 {
        counts.push_str(if i % 5 == 0 { "5\n" } else { "0\n" });
    }
    fs::write(dir.join("counts.txt"), counts).unwrap();
    let cert = ok_json(
        dir,
        &["certificate", "--lambda", "20", "--delta", "0.1", "--k", "3", "--dim", "2", "--shape-counts", "counts.txt"],
    );
    let conf = cert["confidence"].as_f64().unwrap();
    let alpha = cert["alpha"].as_f64().unwrap();
    let beta = cert["beta"].as_f64().unwrap();
    assert!((conf - (1.0 - alpha - beta)).abs() < 1e-12);
    assert!((cert["bound"].as_f64().unwrap() - 2f64.sqrt() * 0.1).abs() < 1e-12);
}

#[test]
fn obj_ingest_samples_and_centers() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut obj = String::from("# mesh\n");
    for i in 0..20 {
        obj.push_str(&format!("v {} {} {}\n", i as f64 * 0.01, 0.1, -0.05));
    }
    obj.push_str("f 1 2 3\n");
    fs::write(dir.join("m.obj"), obj).unwrap();
    ok_json(dir, &["obj-ingest", "--in", "m.obj", "--sample", "10", "--center-unit", "--out", "m.csv"]);
    let text = fs::read_to_string(dir.join("m.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|x| x.trim().parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().flatten().all(|&x| (0.0..=1.0).contains(&x)));
    assert!(rows.iter().all(|r| (r[1] - 0.5).abs() < 1e-12));
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.csv"), "0.1,0.2\n0.3,oops\n").unwrap();
    let out = rcla(dir, &["reduce", "--in", "bad.csv", "--delta", "0.1", "--out", "r.csv"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains('2'));

    let out = rcla(dir, &["reduce", "--in", "missing.csv", "--delta", "0.1", "--out", "r.csv"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn small_experiment_writes_report_and_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let rows = ok_json(
        dir,
        &["--seed", "1", "experiment", "--n-shape", "200", "--ratios", "0.1", "--trials", "2", "--variants", "cla:0.05,rcla:0.05:2", "--out", "rep.json", "--curve", "curve.csv"],
    );
    assert_eq!(rows.as_array().unwrap().len(), 2);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("rep.json")).unwrap()).unwrap();
    assert!(report["schema_version"].is_number());
    let curve = fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert!(curve.starts_with("ratio,variant,mean,sd"));
    assert_eq!(curve.lines().count(), 3);
}
