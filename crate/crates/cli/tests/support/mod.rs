#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use densekg_testkit::checks::fixture;

pub const BIN: &str = env!("CARGO_BIN_EXE_densekg");

pub fn densekg(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("DENSEKG_SCORER_URL")
        .output()
        .expect("densekg runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = densekg(args);
    if !out.status.success() {
        panic!(
            "densekg {} exited with {}:\n{}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        );
    }
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Runs ingest through stats on the shipped fixture inside `dir` and returns
/// the stdout of each step, keyed by step name.
pub fn run_pipeline(dir: &Path, seed: u64) -> Result<BTreeMap<String, String>, String> {
    let seed = seed.to_string();
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let (graph, train, model, thresholds, predicted) =
        (p("graph"), p("training_set.jsonl"), p("model.json"), p("thresholds.json"), p("predicted.jsonl"));
    let (dense, stats) = (p("dense"), p("stats.tsv"));
    let input = fixture("atomic_tiny.csv").to_string_lossy().into_owned();
    let dev = fixture("atomic_tiny_dev_gold.tsv").to_string_lossy().into_owned();
    let steps: [&[&str]; 6] = [
        &["ingest", "--input", &input, "--out", &graph],
        &["make-dataset", "--graph", &graph, "--out", &train],
        &["train", "--train", &train, "--out", &model],
        &["tune-thresholds", "--model", &model, "--dev", &dev, "--out", &thresholds],
        &[
            "complete", "--model", &model, "--graph", &graph, "--thresholds", &thresholds, "--mode", "both",
            "--sample-size", "22", "--out", &predicted, "--dense-out", &dense,
        ],
        &["stats", "--graph", &graph, "--predicted", &predicted, "--out", &stats],
    ];
    let mut stdout = BTreeMap::new();
    for args in steps {
        let mut full = vec!["--seed", &seed, "--log-level", "warn"];
        full.extend_from_slice(args);
        let out = densekg(&full);
        if !out.status.success() {
            return Err(format!("{} exited with {}: {}", args[0], out.status, String::from_utf8_lossy(&out.stderr).trim()));
        }
        stdout.insert(args[0].to_string(), String::from_utf8_lossy(&out.stdout).into_owned());
    }
    Ok(stdout)
}

/// Every file under `root`, keyed by its relative path.
pub fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, files: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, files);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut files = BTreeMap::new();
    walk(root, root, &mut files);
    files
}
