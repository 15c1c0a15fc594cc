use std::path::Path;
use std::process::{Command, Output};

fn tempojd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempojd"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("failed to launch tempojd")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by a signal")
}

fn write_trace(dir: &Path) -> String {
    let path = dir.join("trace.csv");
    let mut text = String::from("node_a,node_b,start,end\n");
    for t in 0..30 {
        let (a, b) = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")][t % 4];
        text.push_str(&format!("{a},{b},{t},{}\n", t + 1));
    }
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&tempojd(&[])), 1);
    assert_eq!(code(&tempojd(&["analyse", "--no-such-flag"])), 1);
    assert_eq!(code(&tempojd(&["bogus"])), 1);
}

#[test]
fn help_and_version_exit_zero() {
    let out = tempojd(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("analyse"));
    assert_eq!(code(&tempojd(&["--version"])), 0);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = tempojd(&[
        "sample",
        "--trace",
        "/nonexistent/trace.csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn single_sample_batch() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let out_dir = dir.path().join("run");
    let out = tempojd(&[
        "sample",
        "--trace",
        &trace,
        "-m",
        "1",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let batch = std::fs::read_to_string(out_dir.join("batch.csv")).unwrap();
    assert_eq!(batch.lines().filter(|l| l.starts_with("tree,")).count(), 1);
    assert!(out_dir.join("manifest.json").exists());
}

#[test]
fn corrupted_batch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("batch.csv");
    std::fs::write(&bad, "batch,3,0,static\ntree,0,0,0,2\nedge,1,0\n").unwrap();
    let out_dir = dir.path().join("run");
    let out = tempojd(&[
        "analyse",
        "--batch",
        bad.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":2:"), "error should name the tree's line: {stderr}");
}

#[test]
fn analyse_then_reanalyse_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let first = dir.path().join("first");
    let out = tempojd(&[
        "analyse",
        "--trace",
        &trace,
        "-m",
        "40",
        "--k-max",
        "2",
        "--seed",
        "3",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "config.json",
        "batch.csv",
        "jd.json",
        "modes.json",
        "overall/shortest_path.dot",
    ] {
        assert!(first.join(f).exists(), "{f} missing");
    }
    let second = dir.path().join("second");
    let batch = first.join("batch.csv");
    let out = tempojd(&[
        "analyse",
        "--batch",
        batch.to_str().unwrap(),
        "--k-max",
        "2",
        "--seed",
        "3",
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(first.join("jd.json")).unwrap(),
        std::fs::read(second.join("jd.json")).unwrap()
    );
}

#[test]
fn repro_lists_and_prints_specs() {
    let out = tempojd(&["repro", "--list"]);
    assert_eq!(code(&out), 0);
    let listed = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(listed.contains("switching") && listed.contains("bridge"));
    let out = tempojd(&["repro", "--print-spec", "tree_usage"]);
    assert_eq!(code(&out), 0);
    let spec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(spec["name"], "tree_usage");
    assert_eq!(code(&tempojd(&["repro", "--print-spec", "nope"])), 1);
}
