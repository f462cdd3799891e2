use std::fs;
use std::process::{Command, Output};

fn srcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_srcd"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn run_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = srcd(&[
        "run", "--synthetic", "100,150,4,0.95,count", "--rank", "4", "--max-iters", "15",
        "--beta1", "0.1", "--beta2", "0.1", "--threads", "2", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["log.csv", "W.mtx", "W.tsv", "F.mtx", "F.tsv", "summary.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let log = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(
        log.lines().next().unwrap(),
        "iteration,elapsed_seconds,kl_objective,total_objective,sparsity_W,sparsity_F"
    );
}

#[test]
fn synth_then_run_mu_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("v.mtx");
    let o = srcd(&["synth", "--synthetic", "60,80,3,0.9,tfidf", "--seed", "3", "--out", mtx.to_str().unwrap()]);
    assert!(o.status.success());
    let out = dir.path().join("run");
    let o = srcd(&[
        "run", "--input", mtx.to_str().unwrap(), "--algorithm", "mu", "--rank", "3",
        "--max-iters", "5", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"algorithm\": \"mu\""));
}

#[test]
fn race_and_scaling_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = srcd(&["race", "--synthetic", "60,90,3,0.95,count", "--rank", "3", "--budget", "0.05", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("race.csv").is_file());
    let o = srcd(&[
        "scaling", "--synthetic", "60,90,3,0.95,count", "--ranks", "2,4", "--thread-counts", "1,2",
        "--iters", "2", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(srcd(&["run"]).status.code(), Some(1));
    assert_eq!(srcd(&["run", "--synthetic", "1,2,3"]).status.code(), Some(1));
    assert_eq!(srcd(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(srcd(&["--help"]).status.code(), Some(0));
    assert_eq!(srcd(&["--version"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = dir.path().join("missing.mtx");
    assert_eq!(srcd(&["run", "--input", missing.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let bad = dir.path().join("neg.mtx");
    fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 -1.0\n").unwrap();
    let o = srcd(&["run", "--input", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let empty = dir.path().join("empty.mtx");
    fs::write(&empty, "%%MatrixMarket matrix coordinate real general\n2 2 0\n").unwrap();
    assert_eq!(srcd(&["run", "--input", empty.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let o = srcd(&["run", "--synthetic", "20,20,2,0.9,count", "--rank", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}
