use std::path::Path;
use std::process::{Command, Output};

use blockcap::bench::{random_block_sparse, TrialSpec};
use blockcap::capacity::{block_ric, capacity_report, DEFAULT_BETA};
use blockcap::models::{DenseModel, FourierModel, SensingModel};
use blockcap::{BlockStructure, CMatrix, CVector};
use blockcap_cli::matrix_file::{format_matrix, format_vector, parse_matrix, read_vector};

fn blockcap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockcap")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn random_matrix(m: usize, n: usize, seed: u64) -> CMatrix {
    let model = DenseModel::new(m, n).unwrap();
    model.assemble(&model.random_init(seed).unwrap()).unwrap()
}

fn parse_f64(s: &str) -> f64 {
    s.trim().parse().unwrap()
}

#[test]
fn capacity_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let a = random_matrix(6, 12, 5);
    let path = write(dir.path(), "a.txt", &format_matrix(&a));
    let out = blockcap(&["capacity", "--matrix", &path, "--blocks", "4", "--out", "res"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = parse_matrix(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let bs = BlockStructure::contiguous(12, 4).unwrap();
    let report = capacity_report(&a, &bs, DEFAULT_BETA).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("res/capacity.csv")).unwrap();
    let values: Vec<f64> = csv.lines().skip(1).map(|l| parse_f64(l.rsplit(',').next().unwrap())).collect();
    assert_eq!(values, report.per_pair);
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert_eq!(parse_f64(last.split_whitespace().nth(1).unwrap()), report.min_capacity);
}

#[test]
fn orthonormal_capacity_and_ric_are_near_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "eye.txt", &format_matrix(&CMatrix::identity(6, 6)));
    let out = blockcap(&["capacity", "--matrix", &path, "--blocks", "3"], dir.path());
    let last = stdout(&out).lines().last().unwrap().to_string();
    assert!(parse_f64(last.split_whitespace().nth(1).unwrap()).abs() < 1e-5);
    let out = blockcap(&["ric", "--matrix", &path, "--blocks", "3", "-t", "2"], dir.path());
    assert!(out.status.success());
    let first = stdout(&out).lines().next().unwrap().to_string();
    assert!(parse_f64(first.split_whitespace().nth(1).unwrap()).abs() < 1e-12);
}

#[test]
fn ric_matches_library_and_flags_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let a = random_matrix(5, 8, 2);
    let path = write(dir.path(), "a.txt", &format_matrix(&a));
    let out = blockcap(&["ric", "--matrix", &path, "--blocks", "4", "-t", "2", "--out", "r"], dir.path());
    assert!(out.status.success());
    let delta = parse_f64(stdout(&out).lines().next().unwrap().split_whitespace().nth(1).unwrap());
    let bs = BlockStructure::contiguous(8, 4).unwrap();
    assert_eq!(delta, block_ric(&a, &bs, 2).unwrap().delta);
    assert_eq!(std::fs::read_to_string(dir.path().join("r/ric.csv")).unwrap().lines().count(), 7);

    let mut d = CMatrix::identity(4, 4);
    let c = d.column(0).into_owned();
    d.set_column(1, &c);
    let d = CMatrix::from_fn(8, 4, |i, j| if i < 4 { d[(i, j)] } else { Default::default() });
    let path = write(dir.path(), "dup.txt", &format_matrix(&d));
    let out = blockcap(&["ric", "--matrix", &path, "--blocks", "4", "-t", "2"], dir.path());
    let delta = parse_f64(stdout(&out).lines().next().unwrap().split_whitespace().nth(1).unwrap());
    assert!((delta - 1.0).abs() < 1e-12);
}

#[test]
fn ric_enumeration_cap_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.txt", &format_matrix(&random_matrix(4, 8, 1)));
    let out = blockcap(&["ric", "--matrix", &path, "--blocks", "8", "-t", "2", "--cap", "10"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn recover_planted_signal() {
    let dir = tempfile::tempdir().unwrap();
    let model = FourierModel::new(8, 12).unwrap();
    let a = model.assemble(&model.random_init(4).unwrap()).unwrap();
    let bs = BlockStructure::contiguous(12, 4).unwrap();
    let x = random_block_sparse(&TrialSpec::new(bs, 1, 1, 3).unwrap(), 0);
    let y: CVector = &a * &x;
    let pa = write(dir.path(), "a.txt", &format_matrix(&a));
    let py = write(dir.path(), "y.txt", &format_vector(&y));
    let px = write(dir.path(), "x.txt", &format_vector(&x));
    let out = blockcap(&["recover", "--matrix", &pa, "--y", &py, "--blocks", "4", "--truth", &px, "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("success=true"));
    assert!(stdout(&out).contains("converged=true"));
    let x_hat = read_vector(&dir.path().join("o/x_hat.txt")).unwrap();
    assert!((x_hat - x).norm() / y.norm() < 1e-3);
}

#[test]
fn recover_dimension_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let pa = write(dir.path(), "a.txt", &format_matrix(&random_matrix(4, 8, 1)));
    let py = write(dir.path(), "y.txt", &format_vector(&CVector::zeros(5)));
    let out = blockcap(&["recover", "--matrix", &pa, "--y", &py, "--blocks", "2", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"model": {"kind": "fourier", "M": 4, "N": 8}, "bogus": true}"#);
    let out = blockcap(&["design", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
    let out = blockcap(&["design"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn design_then_benchmark_then_demo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "fourier", "M": 8, "N": 16},
            "blocks": {"layout": "contiguous", "N": 16, "K": 4},
            "seed": 1,
            "optimizer": {"max_outer": 8},
            "benchmark": {"trials": 4},
            "demo": {"s_b": 1}}"#,
    );
    let out = blockcap(&["design", "--config", &cfg, "--out", "d"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d/summary.json")).unwrap()).unwrap();
    assert!(summary["improvement"].as_f64().unwrap() > 0.0);
    for f in ["p_baseline.txt", "p_optimized.txt", "baseline_matrix.txt", "optimized_matrix.txt", "capacity_trace.csv"] {
        assert!(dir.path().join("d").join(f).exists(), "{f}");
    }

    let out = blockcap(
        &[
            "--threads",
            "1",
            "benchmark",
            "--config",
            &cfg,
            "--matrix",
            "baseline=d/baseline_matrix.txt",
            "--matrix",
            "optimized=d/optimized_matrix.txt",
            "--trials",
            "3",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("b/benchmark.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), blockcap::bench::CSV_HEADER);
    // 2 matrices x 2 solvers x levels 1..=1
    assert_eq!(csv.lines().count(), 1 + 4);
    assert!(csv.lines().skip(1).all(|l| l.contains(",3,")));

    let out = blockcap(&["demo", "--config", &cfg, "--optimized", "d/optimized_matrix.txt", "--out", "m"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("m/demo_summary.json").exists());
    assert!(!dir.path().join("m/truth_grid.csv").exists());
}

#[test]
fn em_demo_writes_three_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"model": {"kind": "em"}, "demo": {"s_b": 2}}"#);
    let model = blockcap::EmModel::new(Default::default()).unwrap();
    let a = model.assemble(&model.random_init(0).unwrap()).unwrap();
    write(dir.path(), "a.txt", &format_matrix(&a));
    let out = blockcap(&["demo", "--config", &cfg, "--optimized", "a.txt", "--out", "m"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["truth_grid.csv", "baseline_grid.csv", "optimized_grid.csv"] {
        let g = std::fs::read_to_string(dir.path().join("m").join(f)).unwrap();
        assert_eq!(g.lines().count(), 12);
        assert!(g.lines().all(|l| l.split(',').count() == 12));
    }
    let truth = std::fs::read_to_string(dir.path().join("m/truth_grid.csv")).unwrap();
    let active = truth.lines().flat_map(|l| l.split(',')).filter(|v| parse_f64(v) > 0.0).count();
    assert_eq!(active, 32);
}

#[test]
fn benchmark_rejects_wrong_matrix_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": {"kind": "dense", "M": 4, "N": 8}, "blocks": {"layout": "contiguous", "N": 8, "K": 2}}"#,
    );
    write(dir.path(), "a.txt", &format_matrix(&random_matrix(5, 8, 0)));
    let out = blockcap(&["benchmark", "--config", &cfg, "--matrix", "x=a.txt", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("b").exists());
}
