use std::path::Path;
use std::process::{Command, Output};

use mmlab::harness::Report;

fn mmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmlab"))
        .current_dir(dir)
        .env_remove("MMLAB_OUT_DIR")
        .args(args)
        .output()
        .expect("spawn mmlab")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const TENT: &str = r#"{
  "space": {"kind": "grid", "dim": 1, "n": 96},
  "field": {"kind": "gallery", "shape": "tent"},
  "functional": "bvsy",
  "params": {"p": 1.5}
}"#;

#[test]
fn generated_files_feed_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = mmlab(
        d,
        &[
            "space",
            "gen",
            r#"{"kind": "random_box", "dim": 2, "n": 80}"#,
            "--seed",
            "5",
            "-o",
            "s.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = mmlab(
        d,
        &[
            "field",
            "gen",
            "--space",
            "s.json",
            "--shape",
            "bump",
            "--center=0.1,-0.1",
            "-o",
            "f.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    write(
        d,
        "run.json",
        r#"{"space": {"kind": "file", "path": "s.json"},
            "field": {"kind": "file", "path": "f.json"},
            "functional": "sobolev_weak", "params": {"p": 2}}"#,
    );
    let out = mmlab(d, &["run", "run.json", "--oracle", "--out-dir", "res"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = Report::read(d.join("res/sobolev_weak.json")).unwrap();
    assert_eq!(report.space.points, 80);
    assert!(report.oracle.as_ref().unwrap().max_relative <= 1e-12);
    assert!(report.scalar("ratio").unwrap() > 0.0);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "tent.json", TENT);
    for threads in ["1", "3"] {
        let out = mmlab(d, &["--threads", threads, "run", "tent.json", "--out-dir", threads]);
        assert!(out.status.success());
    }
    for file in ["bvsy.json", "bvsy_profile.csv"] {
        let a = std::fs::read(d.join("1").join(file)).unwrap();
        let b = std::fs::read(d.join("3").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "tent.json", TENT);
    let out = Command::new(env!("CARGO_BIN_EXE_mmlab"))
        .current_dir(d)
        .env("MMLAB_OUT_DIR", d.join("env"))
        .args(["run", "tent.json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("env/bvsy.json").exists());
}

#[test]
fn configuration_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        d,
        "bad.json",
        "{\n  \"space\": {\"kind\": \"grid\", \"dim\": 1, \"n\": 32},\n  \"functional\": \"bvsy\",\n  \"params\": {\"p\": 0.5}\n}",
    );
    let out = mmlab(d, &["run", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:4"));

    write(
        d,
        "typo.json",
        r#"{"space": {"kind": "grid", "dim": 1, "n": 32}, "functional": "bvsy", "fild": {}}"#,
    );
    assert_eq!(mmlab(d, &["run", "typo.json"]).status.code(), Some(2));

    let out = mmlab(
        d,
        &[
            "field",
            "gen",
            "--space",
            "none.json",
            "--shape",
            "wave",
            "-o",
            "f.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_diff_and_size_limit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "tent.json", TENT);
    let out = mmlab(d, &["oracle-diff", "tent.json"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bvsy") && text.contains("sobolev"));
    assert!(!d.join("bvsy.json").exists());

    write(d, "big.json", &TENT.replace("\"n\": 96", "\"n\": 2048"));
    assert_eq!(mmlab(d, &["oracle-diff", "big.json"]).status.code(), Some(2));

    write(d, "poincare.json", &TENT.replace("\"bvsy\"", "\"poincare\""));
    assert_eq!(mmlab(d, &["oracle-diff", "big.json"]).status.code(), Some(2));
}

#[test]
fn sweep_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "tent.json", TENT);
    let ok = mmlab(d, &["sweep", "tent.json", "--sizes", "128,256,512", "--tol", "0.05"]);
    assert!(ok.status.success());
    let csv = std::fs::read_to_string(d.join("bvsy_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let strict = mmlab(d, &["sweep", "tent.json", "--sizes", "128,256,512", "--tol", "1e-9"]);
    assert_eq!(strict.status.code(), Some(4));
    let short = mmlab(d, &["sweep", "tent.json", "--sizes", "128,256"]);
    assert_eq!(short.status.code(), Some(2));
}
