use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edlae::synthetic::{implicit_feedback, ImplicitFeedbackSpec};
use tempfile::TempDir;

fn edlae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edlae"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), stderr(o));
}

/// `users × items` synthetic interactions as `user_id,item_id` CSV.
fn write_csv(dir: &Path, users: usize, items: usize) -> PathBuf {
    let x = implicit_feedback(&ImplicitFeedbackSpec {
        users,
        items,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let mut text = String::from("user_id,item_id\n");
    for (u, i, _) in x.entries() {
        text.push_str(&format!("user{u},item{i}\n"));
    }
    let path = dir.join("ratings.csv");
    fs::write(&path, text).unwrap();
    path
}

fn ingest(tmp: &TempDir, name: &str, users: usize, items: usize) -> PathBuf {
    let csv = write_csv(tmp.path(), users, items);
    let out = tmp.path().join(name);
    assert_ok(&edlae(&["ingest", "--input", s(&csv), "--out", s(&out), "--seed", "5"]));
    out
}

fn read_lines(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().map(str::to_owned).collect()
}

#[test]
fn ingest_writes_manifest_and_split_files_reproducibly() {
    let tmp = TempDir::new().unwrap();
    let a = ingest(&tmp, "a", 400, 40);
    let csv = tmp.path().join("ratings.csv");
    let b = tmp.path().join("b");
    assert_ok(&edlae(&["ingest", "--input", s(&csv), "--out", s(&b), "--seed", "5"]));
    for f in [
        "manifest.txt",
        "train.csv",
        "validation_foldin.csv",
        "validation_holdout.csv",
        "test_foldin.csv",
        "test_holdout.csv",
        "users.tsv",
        "items.tsv",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(read_lines(&a.join("manifest.txt")).contains(&"seed=5".to_owned()));
}

#[test]
fn missing_input_reports_path() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = edlae(&["ingest", "--input", "/nonexistent/ratings.csv", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ratings.csv"), "{}", stderr(&o));
}

#[test]
fn malformed_row_reports_line() {
    let tmp = TempDir::new().unwrap();
    let csv = tmp.path().join("bad.csv");
    fs::write(&csv, "user_id,item_id,count\na,x,1\nb,y,lots\n").unwrap();
    let o = edlae(&["ingest", "--input", s(&csv), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.csv:3"), "{}", stderr(&o));
}

#[test]
fn occupied_output_dir_needs_force() {
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 300, 30);
    let csv = tmp.path().join("ratings.csv");
    let o = edlae(&["ingest", "--input", s(&csv), "--out", s(&split)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--force"));
    assert_ok(&edlae(&["ingest", "--input", s(&csv), "--out", s(&split), "--force"]));
}

#[test]
fn train_selects_one_model_per_rank_and_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 400, 40);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = edlae(&[
            "train",
            "--split",
            s(&split),
            "--out",
            s(&out),
            "--ranks",
            "2",
            "--lambdas",
            "1,10",
            "--dropouts",
            "0",
        ]);
        assert_ok(&o);
        out
    };
    let a = run("a");
    let b = run("b");
    for kind in ["edlae", "ridge"] {
        let file = format!("model_{kind}_k2.bin");
        assert_eq!(fs::read(a.join(&file)).unwrap(), fs::read(b.join(&file)).unwrap());
    }
    assert_eq!(read_lines(&a.join("grid_trace.jsonl")).len(), 4);
    assert_eq!(read_lines(&a.join("objective_log.jsonl")).len(), 2);
    assert_eq!(fs::read(a.join("grid_trace.jsonl")).unwrap(), fs::read(b.join("grid_trace.jsonl")).unwrap());
    let config = fs::read_to_string(a.join("config.toml")).unwrap();
    assert!(config.contains("command = \"train\""));
}

#[test]
fn rank_above_item_count_fails_before_any_output() {
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 300, 30);
    let out = tmp.path().join("out");
    let o = edlae(&["train", "--split", s(&split), "--out", s(&out), "--ranks", "31"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rank 31"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn singular_system_exits_with_numerical_code() {
    // Fewer training users than items and no regularization leave G + Λ singular.
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 30, 60);
    let o = edlae(&[
        "train",
        "--split",
        s(&split),
        "--out",
        s(&tmp.path().join("out")),
        "--ranks",
        "2",
        "--lambdas",
        "0",
        "--dropouts",
        "0",
        "--models",
        "edlae",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("lambda=0"), "{}", stderr(&o));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 300, 30);
    let cfg = tmp.path().join("job.toml");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            "[data]\nsplit_dir = {:?}\n[grid]\nranks = [3]\nlambdas = [5.0]\ndropouts = [0.25]\n[train]\nmodels = [\"edlae\"]\n",
            s(&split)
        ),
    )
    .unwrap();
    assert_ok(&edlae(&["train", "--config", s(&cfg), "--out", s(&out), "--ranks", "4"]));
    assert!(out.join("model_edlae_k4.bin").exists());
    assert!(!out.join("model_edlae_k3.bin").exists());
    let resolved = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(resolved.contains("ranks = [4]"), "{resolved}");
}

#[test]
fn eval_reports_both_models_and_rejects_corrupt_files() {
    let tmp = TempDir::new().unwrap();
    let split = ingest(&tmp, "split", 400, 40);
    let models = tmp.path().join("models");
    assert_ok(&edlae(&[
        "train", "--split", s(&split), "--out", s(&models), "--ranks", "5", "--lambdas", "10", "--dropouts", "0.25",
    ]));

    let out = tmp.path().join("eval");
    let o = edlae(&["eval", "--split", s(&split), "--model-dir", s(&models), "--out", s(&out)]);
    assert_ok(&o);
    let table = stdout(&o);
    for needle in ["model_edlae_k5", "model_ridge_k5", "ndcg", "recall"] {
        assert!(table.to_lowercase().contains(needle), "{needle} missing from\n{table}");
    }
    let records = read_lines(&out.join("metrics.jsonl"));
    assert_eq!(records.len(), 6);
    let cutoffs: Vec<serde_json::Value> = records.iter().map(|r| serde_json::from_str(r).unwrap()).collect();
    for (metric, cutoff) in [("ndcg", 100), ("recall", 20), ("recall", 50)] {
        assert!(cutoffs
            .iter()
            .any(|r| r["metric"].as_str().unwrap().to_lowercase() == metric && r["cutoff"] == cutoff));
    }

    let bad = tmp.path().join("bad.bin");
    fs::write(&bad, b"NOPE0000000000000000000000000000000000000000").unwrap();
    let o = edlae(&["eval", "--split", s(&split), "--model", s(&bad), "--out", s(&tmp.path().join("e2"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));
}

#[test]
fn verify_records_every_trial() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("verify");
    let o = edlae(&[
        "verify", "--out", s(&out), "--trials", "4", "--m", "12", "--n", "8", "--ks", "2,3", "--steps", "60",
        "--restarts", "1",
    ]);
    assert_ok(&o);
    assert_eq!(read_lines(&out.join("proposition.jsonl")).len(), 4);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("pass: true"));
    for suite in ["zero-diagonal", "projection-optimality", "cross-term", "efficiency-identity"] {
        assert!(summary.contains(suite), "{suite}");
    }
}

#[test]
fn verify_rejects_bottleneck_at_min_dimension() {
    let tmp = TempDir::new().unwrap();
    let o = edlae(&["verify", "--out", s(&tmp.path().join("v")), "--m", "12", "--n", "8", "--ks", "8", "--no-suites"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k=8"), "{}", stderr(&o));
}

#[test]
fn bench_reports_every_stage() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("bench");
    let o = edlae(&[
        "bench", "--out", s(&out), "--items", "40", "--users", "300", "--ks", "2,20", "--repeats", "2",
    ]);
    assert_ok(&o);
    let rows = read_lines(&out.join("bench.jsonl"));
    assert_eq!(rows.len(), 8);
    for stage in ["inversion", "student_gram", "eig", "projection"] {
        assert!(stdout(&o).contains(stage));
    }
}
