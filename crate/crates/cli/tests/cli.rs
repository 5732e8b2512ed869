use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gergm::Family;
use gergm_cli::commands::{FitReport, SimulateSummary};
use gergm_cli::RunManifest;

fn gergm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gergm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> PathBuf {
    let out = gergm(args);
    assert!(out.status.success(), "{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn write_network(path: &Path, n: usize, f: impl Fn(usize, usize) -> f64) {
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| if i == j { "0".into() } else { f(i, j).to_string() }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

fn long_table(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| (x - k as f64 / m).abs().max(((k + 1) as f64 / m - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn missing_network_fails_in_load_stage() {
    let out = gergm(&["fit", "--network", "/no/such/net.csv", "--stats", "edge_density"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage load_network"), "{err}");
}

#[test]
fn non_square_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("y.csv");
    fs::write(&net, "0,1,2\n1,0,2\n").unwrap();
    let out = gergm(&["fit", "--network", net.to_str().unwrap(), "--stats", "edge_density"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage load_network"));
}

#[test]
fn unknown_manifest_field_fails_in_manifest_stage() {
    let dir = tempfile::tempdir().unwrap();
    let man = dir.path().join("m.json");
    fs::write(&man, r#"{"stats": ["edge_density"], "sampels": 10}"#).unwrap();
    let out = gergm(&["simulate", "--manifest", man.to_str().unwrap(), "--nodes", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage manifest"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(gergm(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn theta_mismatch_fails_in_model_stage() {
    let out = gergm(&["simulate", "--nodes", "4", "--stats", "edge_density", "--theta", "1,2", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage model"));
}

#[test]
fn manifest_echo_reparses_to_the_effective_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let man = dir.path().join("m.json");
    fs::write(&man, r#"{"stats": ["edge_density", "reciprocity"], "theta": [0.3, -0.2], "samples": 20, "seed": 9}"#)
        .unwrap();
    let summary = ok(&["simulate", "--manifest", man.to_str().unwrap(), "--nodes", "4", "--out", out.to_str().unwrap()]);
    let s: SimulateSummary = serde_json::from_str(&fs::read_to_string(summary).unwrap()).unwrap();
    let mut expected = RunManifest::load(&man).unwrap();
    expected.nodes = Some(4);
    expected.out = out.clone();
    assert_eq!(s.manifest, expected);
    let echoed = dir.path().join("echo.json");
    fs::write(&echoed, s.manifest.to_json()).unwrap();
    assert_eq!(RunManifest::load(&echoed).unwrap(), expected);
}

#[test]
fn null_model_networks_are_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "simulate", "--nodes", "5", "--stats", "edge_density", "--theta", "0", "--samples", "100", "--format", "long",
        "--seed", "3", "--out", out.to_str().unwrap(),
    ]);
    let rows = long_table(&out.join("networks.csv"));
    assert_eq!(rows.len(), 100 * 20);
    let ks = ks_uniform(rows.iter().map(|r| r[3]).collect());
    assert!(ks < 0.05, "ks {ks}");
}

#[test]
fn simulated_y_is_the_transform_of_x() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "simulate", "--nodes", "4", "--stats", "edge_density", "--theta", "0.5", "--samples", "5", "--format", "long",
        "--term", "intercept", "--beta", "1.5", "--scale", "2", "--out", out.to_str().unwrap(),
    ]);
    for r in long_table(&out.join("networks.csv")) {
        let want = 1.5 + 2.0 * Family::Gaussian.quantile(r[3]);
        assert!((r[4] - want).abs() < 1e-9 * (1.0 + want.abs()), "{r:?}");
    }
}

#[test]
fn matrices_format_writes_one_table_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "simulate", "--nodes", "3", "--stats", "reciprocity", "--theta", "1", "--samples", "12", "--term", "intercept",
        "--beta", "0", "--out", out.to_str().unwrap(),
    ]);
    let names: Vec<String> =
        fs::read_dir(out.join("networks")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names.len(), 24);
    assert!(names.contains(&"x_01.csv".to_string()) && names.contains(&"y_12.csv".to_string()));
}

#[test]
fn fit_then_gof_and_hysteresis_from_report() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("y.csv");
    write_network(&net, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.8);
    let out = dir.path().join("fit");
    let report = ok(&[
        "fit", "--network", net.to_str().unwrap(), "--stats", "edge_density", "--stats", "reciprocity", "--term",
        "intercept", "--samples", "300", "--max-outer-iters", "3", "--out", out.to_str().unwrap(),
    ]);
    let r = FitReport::load(&report).unwrap();
    assert_eq!(r.theta.len(), 2);
    assert_eq!(r.beta.len(), 1);
    assert!(r.theta.iter().all(|e| e.estimate.is_finite()));
    assert!(out.join("trace.csv").exists());

    let gof = dir.path().join("gof");
    ok(&[
        "gof", "--network", net.to_str().unwrap(), "--stats", "edge_density", "--stats", "reciprocity", "--term",
        "intercept", "--samples", "100", "--fit-report", report.to_str().unwrap(), "--out", gof.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(gof.join("gof.csv")).unwrap().lines().count(), 7);

    let hys = dir.path().join("hys");
    ok(&[
        "hysteresis", "--stats", "edge_density", "--stats", "reciprocity", "--nodes", "5", "--which", "reciprocity",
        "--points", "3", "--samples", "50", "--fit-report", report.to_str().unwrap(), "--out", hys.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(hys.join("hysteresis.csv")).unwrap().lines().count(), 4);
}

#[test]
fn hysteresis_with_zero_se_is_one_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "hysteresis", "--stats", "edge_density", "--theta", "0.2", "--se", "0", "--which", "0", "--nodes", "4",
        "--samples", "50", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(out.join("hysteresis.csv")).unwrap().lines().count(), 2);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&[
        "sweep", "--nodes", "4", "--theta-its", "-1,0,1", "--alphas", "0.5,1", "--samples", "300", "--burnin", "100",
        "--dip-replicates", "20", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(out.join("sweep.csv")).unwrap().lines().count(), 7);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let args = [
        "simulate", "--nodes", "4", "--stats", "in_two_stars:0.5:outside", "--theta", "0.3", "--samples", "40",
        "--format", "long", "--term", "intercept", "--beta", "0.1", "--out", out.to_str().unwrap(),
    ];
    ok(&args);
    let first = read_dir_bytes(&out);
    fs::remove_dir_all(&out).unwrap();
    ok(&args);
    assert_eq!(first, read_dir_bytes(&out));
}
