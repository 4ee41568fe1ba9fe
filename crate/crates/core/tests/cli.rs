//! The `convo` binary: exit codes and outputs.

use std::path::Path;
use std::process::{Command, Output};

fn convo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convo")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_shipped_defaults() {
    let out = convo(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
}

#[test]
fn missing_grammar_is_a_config_error_naming_the_path() {
    let out = convo(&[
        "eval",
        "--grammar",
        "/does/not/exist.toml",
        "--corpus",
        "/also/missing.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        text(&out.stderr).contains("/does/not/exist.toml"),
        "{}",
        text(&out.stderr)
    );
}

#[test]
fn validate_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = dir.path().join("patterns.toml");
    std::fs::write(
        &patterns,
        "[[patterns]]\nname = \"dash\"\nsteps = [{ vx = 2.0, duration = 1.0 }]\n\n\
         [[patterns]]\nname = \"twirl\"\nsteps = [{ wz = 9.0, duration = 1.0 }]\n",
    )
    .unwrap();
    let locations = dir.path().join("locations.toml");
    std::fs::write(
        &locations,
        "[[locations]]\nlabel = \"desk\"\nx = 2.0\ny = 2.0\nz = 0.5\nw = 0.5\n",
    )
    .unwrap();
    let out = convo(&[
        "validate",
        "--patterns",
        path(&patterns),
        "--locations",
        path(&locations),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("dash") && stdout.contains("twirl"), "{stdout}");
    assert!(stdout.contains("desk"), "{stdout}");
    assert_eq!(stdout.lines().count(), 3, "{stdout}");
}

#[test]
fn http_backend_needs_an_endpoint() {
    let out = convo(&["validate", "--backend", "http"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stdout).contains("--endpoint"));
}

#[test]
fn eval_writes_report_and_confusion() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    std::fs::write(
        &corpus,
        "{\"text\": \"move forward\", \"true_label\": \"forward\"}\n\
         {\"text\": \"what do you see\", \"true_label\": \"visible_objects\"}\n\
         {\"text\": \"go to the kitchen\", \"true_label\": \"kitchen\"}\n\
         {\"text\": \"juggle\", \"true_label\": \"circle\"}\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let csv = dir.path().join("confusion.csv");
    let log = dir.path().join("log.jsonl");
    let out = convo(&[
        "eval",
        "--corpus",
        path(&corpus),
        "--report",
        path(&report),
        "--csv",
        path(&csv),
        "--log",
        path(&log),
        "--pipeline-delay",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let written = std::fs::read_to_string(&report).unwrap();
    assert_eq!(written, text(&out.stdout));
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v["cra"], 0.75);
    assert_eq!(v["nsr"], 1.0);
    assert!((v["art_seconds"]["mean"].as_f64().unwrap() - 0.05).abs() < 0.005);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("true\\predicted,"));
    assert!(std::fs::read_to_string(&log).unwrap().lines().count() >= 4);

    let again = convo(&["eval", "--corpus", path(&corpus), "--pipeline-delay", "0.05"]);
    assert_eq!(again.stdout, out.stdout, "eval is deterministic");
}

#[test]
fn malformed_corpus_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    std::fs::write(&corpus, "{\"text\": \"stop\", \"true_label\": \"stop\"}\n{\"text\": \n").unwrap();
    let out = convo(&["eval", "--corpus", path(&corpus)]);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("bad.jsonl") && err.contains("line 2"), "{err}");
}

#[test]
fn run_stops_cleanly_after_duration() {
    let out = convo(&["run", "--port", "0", "--duration", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("bridge listening on ws://127.0.0.1:"), "{stdout}");
    assert!(stdout.contains("last cmd_vel zero: true"), "{stdout}");
}
