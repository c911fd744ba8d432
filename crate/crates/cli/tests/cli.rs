use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn infotrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infotrack"))
        .args(args)
        .env_remove("INFOTRACK_OUT_DIR")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn separation_of_equal_gaussians() {
    let out = infotrack(&["separation", "--mean", "0", "--cov", "1", "--mean0", "0", "--cov0", "1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"A":1.0,"I":0.0,"inside":true,"pi":1.0}"#);
}

#[test]
fn separation_of_shifted_gaussians() {
    let out = infotrack(&[
        "separation", "--mean", "2", "--cov", "1", "--mean0", "0", "--cov0", "1", "--delta", "0.5", "--nu", "0.5",
        "--alpha", "1",
    ]);
    let v = stdout_json(&out);
    assert!((v["I"].as_f64().unwrap() - 1.5738773611494659).abs() < 1e-12);
    assert_eq!(v["inside"], Value::Bool(true));
}

#[test]
fn separation_in_two_dimensions() {
    let out = infotrack(&[
        "separation", "--mean", "1,0", "--cov", "1,0,0,1", "--mean0", "0,0", "--cov0", "2,0,0,2", "--delta", "0.25",
    ]);
    let v = stdout_json(&out);
    assert!((v["A"].as_f64().unwrap() - 0.8826233238714759).abs() < 1e-5);
}

#[test]
fn separation_usage_and_domain_errors() {
    let out = infotrack(&["separation", "--mean", "0", "--cov", "1", "--mean0", "0", "--cov0", "1", "--delta", "0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = infotrack(&["separation", "--mean", "0,0", "--cov", "1", "--mean0", "0", "--cov0", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");

    let out = infotrack(&["separation", "--mean", "0", "--cov", "-1", "--mean0", "0", "--cov0", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_lidar_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = infotrack(&["bench-lidar", "--trials", "3", "--seed", "7", "--out-dir", dir.path().to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["summary.json", "trace.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let manifest = read_json(&a.path().join("manifest.json"));
    assert_eq!(manifest["command"], "bench-lidar");
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["config_echo"]["trials"], 3);
    assert_eq!(manifest["config_echo"]["scenario"]["n_valid"], 50);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);

    let trace = fs::read_to_string(a.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 11);
    let leftovers: Vec<_> = fs::read_dir(a.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 3);
}

#[test]
fn bench_lidar_reads_out_dir_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_infotrack"))
        .args(["bench-lidar", "--trials", "2", "--threads", "1"])
        .env("INFOTRACK_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn bench_lidar_without_ghosts_agrees_at_low_noise() {
    let dir = tempfile::tempdir().unwrap();
    let out = infotrack(&[
        "bench-lidar", "--trials", "50", "--n-ghost", "0", "--sigma-sensor", "0.3", "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = read_json(&dir.path().join("summary.json"));
    let ours = summary["tracker"]["mean_rmse"].as_f64().unwrap();
    let theirs = summary["baseline"]["mean_rmse"].as_f64().unwrap();
    assert!((ours - theirs).abs() < 0.5, "{ours} vs {theirs}");
}

#[test]
fn bench_lidar_tracker_ignores_ghost_count() {
    let clean = tempfile::tempdir().unwrap();
    let dirty = tempfile::tempdir().unwrap();
    for (dir, n_ghost) in [(&clean, "0"), (&dirty, "50")] {
        let out = infotrack(&[
            "bench-lidar", "--trials", "20", "--seed", "5", "--n-ghost", n_ghost, "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = read_json(&clean.path().join("summary.json"));
    let b = read_json(&dirty.path().join("summary.json"));
    assert_eq!(a["tracker"], b["tracker"]);
    assert!(b["baseline"]["mean_rmse"].as_f64().unwrap() > 10.0);
}

#[test]
fn bench_lidar_unwritable_directory() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("out");
    let out = infotrack(&["bench-lidar", "--trials", "1", "--out-dir", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn track_csv_default_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let out = infotrack(&["track-csv", "--synthetic", "--out-dir", dir.path().to_str().unwrap()]);
    let v = stdout_json(&out);
    assert!(v["tracker_turnover"].as_f64().unwrap() < v["baseline_turnover"].as_f64().unwrap());
    let csv = fs::read_to_string(dir.path().join("filtered.csv")).unwrap();
    assert!(csv.starts_with("timestamp,price,tracker,baseline,truncated_flag\n"));
    assert_eq!(csv.lines().count(), 1001);
    assert_eq!(read_json(&dir.path().join("metrics.json")), v);
    assert_eq!(read_json(&dir.path().join("manifest.json"))["master_seed"], 42);
}

#[test]
fn track_csv_constant_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = infotrack(&[
        "track-csv", "--synthetic", "--regimes", "none", "--wick-probability", "0", "--micro-noise", "0", "--n-ticks",
        "200", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert!(v["tracker_turnover"].as_f64().unwrap() < 1e-9);
    assert!(v["baseline_turnover"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["n_truncated"], 0);
}

#[test]
fn track_csv_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ticks.csv");
    let mut text = String::from("timestamp,price\n");
    for i in 0..50 {
        let price = if i == 30 { 110.0 } else { 100.0 + 0.01 * (i % 3) as f64 };
        text.push_str(&format!("{},{}\n", 60 * i, price));
    }
    fs::write(&input, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = infotrack(&[
        "track-csv", "--input", input.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert!(v["n_truncated"].as_u64().unwrap() >= 1);
    let csv = fs::read_to_string(out_dir.join("filtered.csv")).unwrap();
    let row: Vec<_> = csv.lines().nth(31).unwrap().split(',').collect();
    assert_eq!(row[4], "1");
}

#[test]
fn track_csv_errors() {
    let out = infotrack(&["track-csv", "--input", "/no/such/ticks.csv", "--out-dir", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("/no/such/ticks.csv"));

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    fs::write(&input, "timestamp,price\n60,100\n120,-1\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = infotrack(&["track-csv", "--input", input.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));
    assert!(!out_dir.join("filtered.csv").exists());

    let out = infotrack(&["track-csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tomo_paper_draw() {
    let v = stdout_json(&infotrack(&["tomo", "--x", "-0.069", "--y", "0.323", "--z", "1.761"]));
    let mle = &v["rho_mle"];
    assert!((mle[0][0][0].as_f64().unwrap() - 1.380).abs() <= 5e-4 + 1e-12);
    assert!((mle[1][1][0].as_f64().unwrap() + 0.380).abs() <= 5e-4 + 1e-12);
    assert!((mle[0][1][1].as_f64().unwrap() + 0.161).abs() <= 5e-4 + 1e-12);
    assert!(v["eigenvalues_mle"][0].as_f64().unwrap() < 0.0);
    assert!(v["eigenvalues_bounded"][0].as_f64().unwrap() > 0.0);
    assert!(v["eigenvalues_bounded"][1].as_f64().unwrap() > 0.0);
}

#[test]
fn tomo_zero_vector_is_maximally_mixed() {
    let v = stdout_json(&infotrack(&["tomo", "--x", "0", "--y", "0", "--z", "0"]));
    for key in ["rho_mle", "rho_bounded"] {
        assert_eq!(v[key], serde_json::json!([[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]));
    }
}

#[test]
fn tomo_simulation_and_conflicts() {
    let a = stdout_json(&infotrack(&["tomo", "--sigma", "0.5", "--seed", "3"]));
    let b = stdout_json(&infotrack(&["tomo", "--sigma", "0.5", "--seed", "3"]));
    assert_eq!(a, b);

    assert_eq!(infotrack(&["tomo", "--z", "2", "--sigma", "0"]).status.code(), Some(2));
    assert_eq!(infotrack(&["tomo", "--x", "0.1"]).status.code(), Some(2));
    assert_eq!(infotrack(&["tomo"]).status.code(), Some(2));
}

#[test]
fn tomo_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("req.json");
    fs::write(&path, r#"{"x": 0.1, "y": 0.0, "z": 0.0, "alpha": 0.5}"#).unwrap();
    let v = stdout_json(&infotrack(&["tomo", "--json", path.to_str().unwrap()]));
    assert_eq!(v["shrinkage"], 1.0);
    assert_eq!(v["rho_bounded"], v["rho_mle"]);
}
