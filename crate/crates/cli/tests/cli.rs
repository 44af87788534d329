mod support;

use std::collections::BTreeSet;
use std::process::Command;

use densekg_core::completion::{Mode, Thresholds};
use densekg_core::relation::Relation;
use densekg_core::store::{read_triplets, save_graph, write_triplets};
use densekg_testkit::checks::{self, fixture};
use densekg_testkit::graphs::cluster_graph;
use densekg_testkit::oracles::{brute_complete, hash_scorer};
use densekg_testkit::service::MockService;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use support::{densekg, ok, s, BIN};

#[test]
fn missing_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = densekg(&["ingest", "--input", "no/such/file.csv", "--out", s(&dir.path().join("g"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));
    assert!(!dir.path().join("g").exists());
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(&config, "[sampling]\nrandom_ratio = -2.0\n").unwrap();
    let graph = dir.path().join("g");
    let out = densekg(&["--config", s(&config), "stats", "--graph", s(&graph)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("random_ratio"));
}

#[test]
fn only_none_annotations_still_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("none.tsv");
    std::fs::write(&input, "event\trelation\tannotation\nPersonX eats lunch\txWant\tnone\nPersonX naps\txIntent\tnone\n")
        .unwrap();
    let graph = dir.path().join("g");
    let out = densekg(&["ingest", "--input", s(&input), "--out", s(&graph)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("every annotation was filtered out"));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["dropped"], 2);
    assert_eq!(report["triplets"], 0);
}

#[test]
fn stats_prints_the_chain_counts() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("chain");
    save_graph(&checks::chain_fixture(), &graph).unwrap();
    let tsv_path = dir.path().join("stats.tsv");
    let stdout = ok(&["stats", "--graph", s(&graph), "--out", s(&tsv_path)]);
    assert_eq!(stdout, "events\t1-hop\t2-hop\t3-hop\n4\t3\t2\t1\n");
    assert_eq!(std::fs::read_to_string(&tsv_path).unwrap(), stdout);

    let checkpoints = dir.path().join("ckpt");
    let resumed = ok(&["stats", "--graph", s(&graph), "--checkpoint-dir", s(&checkpoints)]);
    assert_eq!(resumed, stdout);
    assert!(checkpoints.join("hop3.json").exists());
}

#[test]
fn eval_reports_the_fixture_precision() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, predicted, gold) = checks::precision_fixture();
    let graph_dir = dir.path().join("g");
    save_graph(&graph, &graph_dir).unwrap();
    let pred = dir.path().join("pred.jsonl");
    write_triplets(&pred, &predicted).unwrap();
    let gold_path = dir.path().join("gold.tsv");
    gold.write_tsv(&gold_path).unwrap();
    let report_path = dir.path().join("report.json");

    let stdout = ok(&[
        "eval",
        "--graph",
        s(&graph_dir),
        "--predicted",
        s(&pred),
        "--gold",
        s(&gold_path),
        "--out",
        s(&report_path),
    ]);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["total"], 0.75);
    assert_eq!(report["intra"], 1.0);
    assert_eq!(report["inter"], 0.5);
    assert_eq!(report["uncovered"], 1);
    let written: Value = serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(written, report);
}

#[test]
fn predictions_must_reference_graph_events() {
    let dir = tempfile::tempdir().unwrap();
    let (graph, mut predicted, gold) = checks::precision_fixture();
    let graph_dir = dir.path().join("g");
    save_graph(&graph, &graph_dir).unwrap();
    predicted[0].head.0 = "e_missing".into();
    let pred = dir.path().join("pred.jsonl");
    write_triplets(&pred, &predicted).unwrap();
    let gold_path = dir.path().join("gold.tsv");
    gold.write_tsv(&gold_path).unwrap();
    let out = densekg(&["eval", "--graph", s(&graph_dir), "--predicted", s(&pred), "--gold", s(&gold_path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("e_missing"));
}

#[test]
fn scoring_commands_need_a_scorer() {
    let dir = tempfile::tempdir().unwrap();
    let th = dir.path().join("th.json");
    Thresholds::uniform(1.0).save(&th).unwrap();
    let graph_dir = dir.path().join("g");
    save_graph(&checks::precision_fixture().0, &graph_dir).unwrap();
    let out = densekg(&[
        "complete",
        "--graph",
        s(&graph_dir),
        "--thresholds",
        s(&th),
        "--sample-size",
        "2",
        "--out",
        s(&dir.path().join("p.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no scorer selected"));
}

#[test]
fn complete_through_the_service_matches_the_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let graph = cluster_graph(&mut rng, 40, 6, 20);
    let f = hash_scorer(41);
    let service = MockService::scoring("hash", f.clone());
    let dir = tempfile::tempdir().unwrap();
    let graph_dir = dir.path().join("g");
    save_graph(&graph, &graph_dir).unwrap();
    let mut thresholds = Thresholds::uniform(0.9);
    thresholds.set(Relation::XPersona, 1.3);
    let th = dir.path().join("th.json");
    thresholds.save(&th).unwrap();

    for (mode, name) in [(Mode::Intra, "intra"), (Mode::Inter, "inter"), (Mode::Both, "both")] {
        let pred = dir.path().join(format!("{name}.jsonl"));
        // the service URL comes from the environment only
        let out = Command::new(BIN)
            .args(["--seed", "3", "complete", "--graph", s(&graph_dir), "--thresholds", s(&th)])
            .args(["--mode", name, "--sample-size", "6", "--batch-size", "7", "--out", s(&pred)])
            .env("DENSEKG_SCORER_URL", service.url())
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let got: BTreeSet<_> = read_triplets(&pred)
            .unwrap()
            .into_iter()
            .map(|t| (t.head.0, t.relation, t.tail.0, t.confidence.unwrap().to_bits()))
            .collect();
        assert_eq!(got, brute_complete(&graph, &f, &thresholds, mode), "{name}");
    }
}

#[test]
fn ingest_writes_splits_and_relation_counts() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g");
    ok(&["ingest", "--input", s(&fixture("atomic_tiny.csv")), "--out", s(&graph)]);
    let lines = |name: &str| std::fs::read_to_string(graph.join("splits").join(name)).unwrap().lines().count();
    assert_eq!((lines("train.txt"), lines("dev.txt"), lines("test.txt")), (16, 3, 3));
    let dist: Value = serde_json::from_slice(&std::fs::read(graph.join("original_relations.json")).unwrap()).unwrap();
    assert!(dist.as_object().unwrap().values().all(|v| v.as_u64().unwrap() > 0));

    let dataset = dir.path().join("training_set.jsonl");
    ok(&["--seed", "9", "make-dataset", "--graph", s(&graph), "--out", s(&dataset)]);
    let unknown = dir.path().join("bad_split.txt");
    std::fs::write(&unknown, "no_such_cluster\n").unwrap();
    let out = densekg(&["make-dataset", "--graph", s(&graph), "--split", s(&unknown), "--out", s(&dataset)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_artifacts_depend_on_the_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    support::run_pipeline(a.path(), 1).unwrap();
    support::run_pipeline(b.path(), 2).unwrap();
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    assert_eq!(read(&a, "graph/events.jsonl"), read(&b, "graph/events.jsonl"));
    assert_ne!(read(&a, "training_set.jsonl"), read(&b, "training_set.jsonl"));

    let out = a.path().join("paths.tsv");
    let args = |seed: &'static str| {
        [
            "--seed", seed, "paths", "--graph", s(&a.path().join("dense")), "--k", "2", "--n", "20", "--rule",
            "heuristic", "--out", s(&out),
        ]
        .map(String::from)
    };
    let run = |seed| {
        let a = args(seed);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>());
        std::fs::read_to_string(&out).unwrap()
    };
    let first = run("5");
    assert_eq!(first.lines().count(), 20);
    assert_eq!(first, run("5"));
}
