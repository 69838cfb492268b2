use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn divrate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divrate"))
        .args(args)
        .env("DIVRATE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_sample_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let pair = dir.path().join("pair.csv");
    let sample = dir.path().join("sample.csv");
    let est = dir.path().join("est");

    let out = divrate(&["solve", "--g", "one", "--B", "one", "--out", s(&pair)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let side = fs::read_to_string(pair.with_extension("lambda")).unwrap();
    let lambda: f64 = side.trim().strip_prefix("lambda=").unwrap().parse().unwrap();
    assert!((lambda - 1.0).abs() < 1e-6);

    let out = divrate(&["sample", "--pair", s(&pair), "--n", "2000", "--seed", "4", "--out", s(&sample)]);
    assert!(out.status.success());
    assert_eq!(fs::read_to_string(&sample).unwrap().lines().count(), 2001);

    let out = divrate(&[
        "estimate", "--sample", s(&sample), "--g", "one", "--pair", s(&pair), "--B", "one", "--out", s(&est),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["N_hat.csv", "D_hat.csv", "H_hat.csv", "B_tilde.csv", "gl_density.csv", "gl_derivative.csv"] {
        assert!(est.join(f).exists(), "{f}");
    }
    let summary = fs::read_to_string(est.join("summary.txt")).unwrap();
    let err_n: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("err_N="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err_n < 0.3, "{err_n}");
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.conf");
    fs::write(&config, "g = one\nB = one\nn = 300, 600\nreplications = 2\nseed = 9\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = divrate(&["bench", "--config", s(&config), "--out", s(&out_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    let aggregates = fs::read_to_string(out_dir.join("aggregates.csv")).unwrap();
    assert_eq!(aggregates.lines().count(), 3);
    assert!(out_dir.join("plots").join("N_n300.csv").exists());
}

#[test]
fn bad_input_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = divrate(&["solve", "--g", "nonsense", "--B", "one", "--out", s(&dir.path().join("p.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown rate"));

    let out = divrate(&["sample", "--pair", s(&dir.path().join("missing.csv")), "--n", "5", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
