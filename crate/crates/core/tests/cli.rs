//! Command-line behaviour: exit codes and emitted files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absa-difficulty"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, corpora: &[PathBuf], embeddings: &Path) -> PathBuf {
    let list = corpora
        .iter()
        .map(|p| format!("{:?}", p.display().to_string()))
        .collect::<Vec<_>>()
        .join(", ");
    let text = format!(
        "seed = 7\nout = {:?}\n\n[paths]\ncorpora = [{list}]\nembeddings = {:?}\n",
        dir.join("out").display().to_string(),
        embeddings.display().to_string()
    );
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn toy_corpora() -> Vec<PathBuf> {
    ["laptops", "restaurants", "mtsc"]
        .iter()
        .map(|c| fixture(&format!("corpora/{c}.jsonl")))
        .collect()
}

fn stdout_dir(out: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&out.stdout).trim())
}

#[test]
fn help_exits_zero() {
    let out = cli(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(cli(&["stats", "--bogus"]).status.code(), Some(2));
}

#[test]
fn missing_corpus_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &[tmp.path().join("absent.jsonl")],
        &fixture("embeddings/toy_embeddings.jsonl"),
    );
    let out = cli(&["stats", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn stats_emits_three_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &toy_corpora(),
        &fixture("embeddings/toy_embeddings.jsonl"),
    );
    let out = cli(&["stats", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dir = stdout_dir(&out);
    for table in ["datasets", "tokens", "linguistic"] {
        assert!(dir.join(format!("{table}.csv")).exists(), "{table}");
    }
}

#[test]
fn ragged_embeddings_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(fixture("embeddings/toy_embeddings.jsonl")).unwrap();
    let mut lines: Vec<String> = good.lines().map(String::from).collect();
    let record: serde_json::Value = serde_json::from_str(&lines[3]).unwrap();
    let id = record["id"].as_str().unwrap();
    lines[3] = format!("{{\"id\": \"{id}\", \"vector\": [0.1, 0.2, 0.3]}}");
    let ragged = tmp.path().join("ragged.jsonl");
    fs::write(&ragged, lines.join("\n")).unwrap();
    let config = write_config(tmp.path(), &toy_corpora(), &ragged);
    let out = cli(&["benchmark", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn difficulty_without_bundle_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &toy_corpora(),
        &fixture("embeddings/toy_embeddings.jsonl"),
    );
    let out = cli(&["difficulty", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dummy_roster_gives_single_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &toy_corpora(),
        &fixture("embeddings/toy_embeddings.jsonl"),
    );
    let out = cli(&[
        "benchmark",
        "--config",
        config.to_str().unwrap(),
        "--roster",
        "dummy",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(stdout_dir(&out).join("benchmark_macro.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "one row per representation: {rows:?}");
    assert!(rows.iter().all(|r| r.contains("DummyClassifier")));
}

#[test]
fn full_run_then_oversized_k() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &toy_corpora(),
        &fixture("embeddings/toy_embeddings.jsonl"),
    );
    let config = config.to_str().unwrap();
    let mut dir = PathBuf::new();
    for cmd in ["stats", "benchmark", "difficulty", "predict-difficulty"] {
        let out = cli(&[cmd, "--config", config]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        dir = stdout_dir(&out);
    }
    for table in [
        "difficulty2",
        "difficulty2_smote",
        "difficulty6",
        "difficulty6_smote",
    ] {
        let csv = fs::read_to_string(dir.join(format!("{table}.csv"))).unwrap();
        assert!(csv.lines().any(|l| l.starts_with("DummyClassifier,")), "{table}");
    }
    let run_id = dir.file_name().unwrap().to_str().unwrap();
    let out = cli(&[
        "predict-difficulty",
        "--config",
        config,
        "--k",
        "1000",
        "--run-id",
        run_id,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["report", "--config", config]);
    assert_eq!(out.status.code(), Some(0));
}
