//! The `retrials` binary: outputs, overrides and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn write_config(dir: &Path, extra: serde_json::Value) -> PathBuf {
    let mut config = serde_json::json!({
        "task": "game24",
        "method": "io",
        "budget": "0.01",
        "max_trials": 3,
        "seed": 1,
        "cost_model": "gpt-4o-mini",
        "datasets": { "game24": fixtures().join("game24/24.csv") },
        "backend": "mock",
        "mock": { "success_probability": 0.4, "prompt_tokens": 400, "completion_tokens": 200 },
        "out": dir.join("out"),
    });
    for (k, v) in extra.as_object().unwrap() {
        config[k] = v.clone();
    }
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn retrials(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrials")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({}));
    let out = retrials(&["run", s(&config)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run_dir = dir.path().join("out/game24-io-T0.7-s1");
    for file in ["config.json", "ledger.jsonl", "report.json", "curves.csv", "curves.json"] {
        assert!(run_dir.join(file).exists(), "missing {file}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap()).unwrap();
    let trials = report["trials"].as_array().unwrap().len();
    let csv = std::fs::read_to_string(run_dir.join("curves.csv")).unwrap();
    assert_eq!(csv.lines().count(), trials + 1);
    assert!(csv.starts_with("label,x,y,axis,metric\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solved"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({}));
    let other = dir.path().join("elsewhere");
    let out = retrials(&[
        "run", s(&config), "--method", "cot", "--temperature", "0.3", "--seed", "5", "--budget", "0.002",
        "--max-trials", "2", "--concurrency", "2", "--out", s(&other),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(other.join("game24-cot-T0.3-s5/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["config"]["budget_limit"], "0.002000000000");
    assert_eq!(report["config"]["concurrency"], 2);
    assert_eq!(report["config"]["max_trials"], 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({ "budjet": "1" }));
    assert_eq!(retrials(&["run", s(&config)]).status.code(), Some(2));
    assert_eq!(retrials(&["run", s(&dir.path().join("absent.json"))]).status.code(), Some(2));
    let config = write_config(dir.path(), serde_json::json!({ "temperature": 9.0 }));
    assert_eq!(retrials(&["run", s(&config)]).status.code(), Some(2));
    assert_eq!(retrials(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dataset_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({ "datasets": { "game24": dir.path().join("nope.csv") } }));
    let out = retrials(&["run", s(&config)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Rank,Puzzles\n1,1 2 3\n").unwrap();
    let config = write_config(dir.path(), serde_json::json!({ "datasets": { "game24": bad } }));
    assert_eq!(retrials(&["run", s(&config)]).status.code(), Some(3));
}

#[test]
fn resume_replays_and_refuses_edited_configs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({}));
    assert_eq!(retrials(&["run", s(&config)]).status.code(), Some(0));
    let run_dir = dir.path().join("out/game24-io-T0.7-s1");
    let report = std::fs::read(run_dir.join("report.json")).unwrap();

    let out = retrials(&["resume", s(&run_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(run_dir.join("report.json")).unwrap(), report);

    let snapshot = run_dir.join("config.json");
    let edited = std::fs::read_to_string(&snapshot).unwrap().replace("\"seed\": 1", "\"seed\": 2");
    std::fs::write(&snapshot, edited).unwrap();
    let out = retrials(&["resume", s(&run_dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config mismatch"));
}

#[test]
fn sweep_writes_one_family_per_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), serde_json::json!({}));
    let out = retrials(&["sweep", s(&config), "--temperatures", "1.0,0.3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep-game24-io-s1.csv")).unwrap();
    let labels: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert!(labels.first() == Some(&"game24/io/T0.3") && labels.last() == Some(&"game24/io/T1"), "{labels:?}");
    assert!(dir.path().join("out/game24-io-T0.3-s1/report.json").exists());

    assert_eq!(retrials(&["sweep", s(&config), "--temperatures"]).status.code(), Some(2));
}
