//! End-to-end checks of the installed binary: argument handling, exit codes,
//! and the files a run leaves behind.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tensemble-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tensemble"))
        .args(args)
        .output()
        .unwrap()
}

/// Three well-separated point pairs; trivial to cluster, fast to refine.
fn write_tiny_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("data.csv");
    let mut rows = String::new();
    for (c, (x, y)) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)].iter().enumerate() {
        for i in 0..4 {
            let dx = 0.1 * i as f64;
            rows.push_str(&format!("{},{},{c}\n", x + dx, y + dx));
        }
    }
    std::fs::write(&path, rows).unwrap();
    path
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = run(&[flag]);
        assert_eq!(out.status.code(), Some(0), "{flag}");
    }
    let out = run(&["ensemble", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--lambda"));
}

#[test]
fn usage_errors_exit_one() {
    // Unknown flag.
    assert_eq!(run(&["ensemble", "--no-such-flag"]).status.code(), Some(1));
    // No input source at all.
    let dir = scratch("usage");
    let out = run(&["ensemble", "--out-dir", dir.join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--pool or --data"));
    // Sweep needs exactly one grid.
    let out = run(&[
        "sweep",
        "--data",
        "x.csv",
        "--out-dir",
        dir.join("out2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_data_exits_two() {
    let dir = scratch("malformed");
    let path = dir.join("bad.csv");
    std::fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
    let out = run(&[
        "ensemble",
        "--data",
        path.to_str().unwrap(),
        "--truth-last-column",
        "--out-dir",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.csv"), "stderr: {stderr}");
}

#[test]
fn missing_file_exits_two() {
    let dir = scratch("missing");
    let out = run(&[
        "ensemble",
        "--pool",
        dir.join("nowhere.csv").to_str().unwrap(),
        "--truth",
        dir.join("nowhere_truth.csv").to_str().unwrap(),
        "--out-dir",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_ensemble_produces_the_documented_files() {
    let dir = scratch("roundtrip");
    let data = write_tiny_dataset(&dir);
    let pool_dir = dir.join("pool");

    let out = run(&[
        "generate",
        "--data",
        data.to_str().unwrap(),
        "--truth-last-column",
        "--pool-size",
        "12",
        "--kmeans-iters",
        "50",
        "--seed",
        "5",
        "--out-dir",
        pool_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(pool_dir.join("pool.csv").is_file());
    assert!(pool_dir.join("truth.csv").is_file());
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(pool_dir.join("pool_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["pool_size"], 12);
    assert_eq!(manifest["n_samples"], 12);

    let run_dir = dir.join("run");
    let out = run(&[
        "ensemble",
        "--pool",
        pool_dir.join("pool.csv").to_str().unwrap(),
        "--truth",
        pool_dir.join("truth.csv").to_str().unwrap(),
        "--m",
        "6",
        "--reps",
        "2",
        "--lambda",
        "2.0",
        "--seed",
        "9",
        "--save-matrices",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("method"), "stdout: {stdout}");
    assert!(stdout.contains("ours_sc"), "stdout: {stdout}");

    for file in ["manifest.json", "summary.csv", "report.json"] {
        assert!(run_dir.join(file).is_file(), "{file}");
    }
    for rep in 0..2 {
        let rep_dir = run_dir.join(format!("rep_{rep}"));
        for file in [
            "labels_sc.csv",
            "labels_ea.csv",
            "metrics.json",
            "refined.csv",
        ] {
            assert!(rep_dir.join(file).is_file(), "rep_{rep}/{file}");
        }
    }

    // The tiny blobs are unambiguous: every method should score perfectly.
    let summary = std::fs::read_to_string(run_dir.join("summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] != "base" {
            assert_eq!(fields[2], "1.000000", "line: {line}");
            assert_eq!(fields[3], "0.000000", "line: {line}");
        }
    }

    // A repetition's labels file has one label per sample.
    let labels = std::fs::read_to_string(run_dir.join("rep_0/labels_sc.csv")).unwrap();
    assert_eq!(labels.lines().count(), 12);
}

#[test]
fn backend_selection_limits_the_outputs() {
    let dir = scratch("backend");
    let data = write_tiny_dataset(&dir);
    let run_dir = dir.join("run");
    let out = run(&[
        "ensemble",
        "--data",
        data.to_str().unwrap(),
        "--truth-last-column",
        "--pool-size",
        "8",
        "--m",
        "4",
        "--reps",
        "1",
        "--lambda",
        "2.0",
        "--backend",
        "sc",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        run_dir.join("pool.csv").is_file(),
        "on-the-fly pool is persisted"
    );
    assert!(run_dir.join("rep_0/labels_sc.csv").is_file());
    assert!(!run_dir.join("rep_0/labels_ea.csv").exists());
    assert!(!run_dir.join("rep_0/refined.csv").exists());
    let summary = std::fs::read_to_string(run_dir.join("summary.csv")).unwrap();
    assert!(summary.contains("ours_sc"));
    assert!(!summary.contains("ours_ea"));
}

#[test]
fn sweep_writes_one_directory_per_grid_point() {
    let dir = scratch("sweep");
    let data = write_tiny_dataset(&dir);
    let run_dir = dir.join("run");
    let out = run(&[
        "sweep",
        "--data",
        data.to_str().unwrap(),
        "--truth-last-column",
        "--pool-size",
        "8",
        "--m",
        "4",
        "--reps",
        "1",
        "--lambda-grid",
        "0.5,2.0",
        "--seed",
        "4",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(run_dir.join("sweep.csv").is_file());
    assert!(run_dir.join("lambda_0.5/summary.csv").is_file());
    assert!(run_dir.join("lambda_2/summary.csv").is_file());
    let sweep = std::fs::read_to_string(run_dir.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("parameter,value,method,metric,mean,std\n"));
    assert!(sweep.contains("lambda,0.5,"));
    assert!(sweep.contains("lambda,2,"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch("deterministic");
    let data = write_tiny_dataset(&dir);
    let read_all = |out: &Path| -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        (
            std::fs::read(out.join("summary.csv")).unwrap(),
            std::fs::read(out.join("manifest.json")).unwrap(),
            std::fs::read(out.join("rep_0/labels_sc.csv")).unwrap(),
        )
    };
    let mut results = Vec::new();
    for tag in ["a", "b"] {
        let out_dir = dir.join(tag);
        let out = run(&[
            "ensemble",
            "--data",
            data.to_str().unwrap(),
            "--truth-last-column",
            "--pool-size",
            "10",
            "--m",
            "5",
            "--reps",
            "2",
            "--seed",
            "6",
            "--threads",
            "1",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        results.push(read_all(&out_dir));
    }
    assert_eq!(results[0].0, results[1].0, "summary.csv");
    assert_eq!(results[0].2, results[1].2, "labels_sc.csv");
    // Manifests differ only if they embed paths; sources point at the same
    // input here, so they must match too.
    assert_eq!(results[0].1, results[1].1, "manifest.json");
}

#[test]
fn threaded_runs_match_the_sequential_summary() {
    let dir = scratch("threads");
    let data = write_tiny_dataset(&dir);
    let mut summaries = Vec::new();
    for (tag, threads) in [("seq", "1"), ("par", "3")] {
        let out_dir = dir.join(tag);
        let out = run(&[
            "ensemble",
            "--data",
            data.to_str().unwrap(),
            "--truth-last-column",
            "--pool-size",
            "10",
            "--m",
            "5",
            "--reps",
            "3",
            "--seed",
            "8",
            "--threads",
            threads,
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        summaries.push(std::fs::read(out_dir.join("summary.csv")).unwrap());
    }
    assert_eq!(summaries[0], summaries[1]);
}

#[test]
fn perfect_pool_scores_one_across_the_board() {
    let dir = scratch("perfect");
    // A pool whose single column IS the truth.
    let truth: Vec<u32> = (0..12).map(|i| i / 4).collect();
    let pool_path = dir.join("pool.csv");
    let truth_path = dir.join("truth.csv");
    let pool_rows: String = truth.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(&pool_path, &pool_rows).unwrap();
    std::fs::write(&truth_path, &pool_rows).unwrap();

    let run_dir = dir.join("run");
    let out = run(&[
        "ensemble",
        "--pool",
        pool_path.to_str().unwrap(),
        "--truth",
        truth_path.to_str().unwrap(),
        "--m",
        "1",
        "--reps",
        "1",
        "--orient",
        "frontal",
        "--out-dir",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = std::fs::read_to_string(run_dir.join("summary.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[2], "1.000000", "line: {line}");
    }
}
