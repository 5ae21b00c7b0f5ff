//! Drives the `mcr-graph` binary end to end on the mini-corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mcr_graph::corpus::to_export;

use super::mini;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mcr-graph"))
}

/// Runs the binary in test mode with `args`.
pub fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--test-mode")
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

/// Like `run`, but panics with stderr unless the exit code is 0.
pub fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "mcr-graph {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Writes the mini-corpus as a provider export (JSON lines) into `dir`.
pub fn write_mini_export(dir: &Path) -> PathBuf {
    let path = dir.join("export.jsonl");
    let text: String = to_export(&mini::corpus())
        .iter()
        .map(|d| serde_json::to_string(d).unwrap() + "\n")
        .collect();
    std::fs::write(&path, text).unwrap();
    path
}

pub fn write_run_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.json");
    let cfg = serde_json::json!({
        "seed": 2,
        "ratio": 0.6,
        "stability_window": 2,
        "model": { "hidden_dims": [16, 16] },
        "train": { "epochs": 60 }
    });
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

/// Artifacts of one ingest, split, train, evaluate, predict run.
pub const ARTIFACTS: [&str; 6] = [
    "corpus.jsonl",
    "split.json",
    "model.json",
    "metrics.json",
    "report/report.txt",
    "report/report.json",
];

/// Runs the whole pipeline in `dir` and returns the artifact bytes in
/// `ARTIFACTS` order plus the concatenated stderr.
pub fn full_pipeline(dir: &Path) -> (Vec<Vec<u8>>, String) {
    let export = write_mini_export(dir);
    let cfg = write_run_config(dir);
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (export, cfg) = (
        export.to_string_lossy().into_owned(),
        cfg.to_string_lossy().into_owned(),
    );
    let steps: Vec<Vec<String>> = vec![
        vec![
            "ingest".into(),
            "--input".into(),
            export,
            "--out".into(),
            p("corpus.jsonl"),
            "--config".into(),
            cfg.clone(),
        ],
        vec![
            "split".into(),
            "--corpus".into(),
            p("corpus.jsonl"),
            "--out".into(),
            p("split.json"),
            "--config".into(),
            cfg.clone(),
        ],
        vec![
            "train".into(),
            "--task".into(),
            "likelihood".into(),
            "--corpus".into(),
            p("corpus.jsonl"),
            "--split".into(),
            p("split.json"),
            "--out".into(),
            p("model.json"),
            "--config".into(),
            cfg.clone(),
        ],
        vec![
            "evaluate".into(),
            "--task".into(),
            "likelihood".into(),
            "--corpus".into(),
            p("corpus.jsonl"),
            "--split".into(),
            p("split.json"),
            "--model".into(),
            p("model.json"),
            "--out".into(),
            p("metrics.json"),
            "--config".into(),
            cfg.clone(),
        ],
        vec![
            "predict".into(),
            "--model".into(),
            p("model.json"),
            "--corpus".into(),
            p("corpus.jsonl"),
            "--split".into(),
            p("split.json"),
            "--out".into(),
            p("report"),
            "--config".into(),
            cfg,
        ],
    ];
    let mut stderr = String::new();
    for step in &steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        stderr.push_str(&String::from_utf8_lossy(&run_ok(&args).stderr));
    }
    let bytes = ARTIFACTS
        .iter()
        .map(|a| std::fs::read(dir.join(a)).unwrap())
        .collect();
    (bytes, stderr)
}
