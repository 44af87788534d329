use densekg_core::dataset::{
    build_training_set, negative_count, read_training_set, write_training_set, SamplingConfig, Source,
    DEFAULT_PERSONA_RATIO, DEFAULT_RANDOM_RATIO,
};
use densekg_core::error::DatasetError;
use densekg_core::graph::ClusterId;
use densekg_testkit::checks;

#[test]
fn fixture_counts_and_constraints() {
    println!("{}", checks::dataset_builder().unwrap());
}

#[test]
fn default_ratios_on_the_fixture() {
    assert_eq!(negative_count(DEFAULT_RANDOM_RATIO, 100), 408);
    assert_eq!(negative_count(DEFAULT_PERSONA_RATIO, 100), 163);
    let (graph, split) = checks::dataset_fixture();
    let ex = build_training_set(&graph, &split, &SamplingConfig::default()).unwrap();
    assert_eq!(ex.len(), 100 + 408 + 163);
}

#[test]
fn seeds_change_the_sample_and_files_round_trip() {
    let (graph, split) = checks::dataset_fixture();
    let a = build_training_set(&graph, &split, &SamplingConfig { seed: 1, ..Default::default() }).unwrap();
    let b = build_training_set(&graph, &split, &SamplingConfig { seed: 2, ..Default::default() }).unwrap();
    assert_ne!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.jsonl");
    write_training_set(&path, &a).unwrap();
    assert_eq!(read_training_set(&path).unwrap(), a);
}

#[test]
fn sub_split_only_uses_its_clusters() {
    let (graph, split) = checks::dataset_fixture();
    let ex = build_training_set(&graph, &split[..5], &SamplingConfig::default()).unwrap();
    let positives: Vec<_> = ex.iter().filter(|e| e.source == Source::Positive).collect();
    assert_eq!(positives.len(), 20);
    assert!(positives.iter().all(|e| e.head.starts_with("PersonX plans event ")));
    let bases: Vec<String> = (0..5).map(|c| format!("PersonX plans event {c}")).collect();
    assert!(ex.iter().all(|e| bases.contains(&e.head)));
}

#[test]
fn unknown_cluster_is_an_error() {
    let (graph, _) = checks::dataset_fixture();
    let err = build_training_set(&graph, &[ClusterId::from("missing")], &SamplingConfig::default()).unwrap_err();
    assert!(matches!(err, DatasetError::UnknownCluster(_)), "{err}");
}
