use densekg_core::completion::{
    complete, plan_candidates, tune_from_scores, CompletionPlan, Mode, Objective, Origin, Thresholds,
};
use densekg_core::error::CompletionError;
use densekg_core::relation::{Label, Relation, K};
use densekg_core::scorer::{FnScorer, ScoreVector};
use densekg_testkit::checks;
use densekg_testkit::graphs::cluster_graph;
use densekg_testkit::oracles::hash_scorer;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_brute_force_and_is_monotone() {
    println!("{}", checks::completion_oracle(17, 100).unwrap());
}

#[test]
fn candidates_are_sorted_unique_and_never_human_linked() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = cluster_graph(&mut rng, 40, 6, 20);
    let plan = CompletionPlan {
        cluster_sample_size: 4,
        seed: 9,
        ..CompletionPlan::default()
    };
    let c = plan_candidates(&g, &plan).unwrap();
    assert!(c.windows(2).all(|w| (&w[0].head, &w[0].tail) < (&w[1].head, &w[1].tail)));
    for p in &c {
        let (h, t) = (g.node(&p.head).unwrap(), g.node(&p.tail).unwrap());
        assert!(h != t && !g.human_linked(h, t));
    }
    assert!(c.iter().any(|p| p.origin == Origin::Intra));
    assert!(c.iter().any(|p| p.origin == Origin::Inter));
    assert_eq!(plan_candidates(&g, &plan).unwrap(), c);
}

#[test]
fn sample_size_is_validated() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = cluster_graph(&mut rng, 10, 3, 0);
    let plan = |mode, n| CompletionPlan {
        mode,
        cluster_sample_size: n,
        ..CompletionPlan::default()
    };
    assert!(matches!(plan_candidates(&g, &plan(Mode::Both, 4)), Err(CompletionError::SampleTooLarge { .. })));
    assert!(matches!(plan_candidates(&g, &plan(Mode::Inter, 1)), Err(CompletionError::SampleTooSmall(1))));
    assert!(plan_candidates(&g, &plan(Mode::Intra, 1)).is_ok());
}

#[test]
fn batch_size_does_not_change_the_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = cluster_graph(&mut rng, 30, 4, 10);
    let scorer = FnScorer::new("hash", hash_scorer(1));
    let th = Thresholds::uniform(0.9);
    let run = |batch_size| {
        let plan = CompletionPlan {
            cluster_sample_size: 4,
            batch_size,
            ..CompletionPlan::default()
        };
        complete(&g, &scorer, &th, &plan).unwrap()
    };
    let base = run(1);
    assert!(!base.is_empty());
    for b in [2, 7, 256, 10_000] {
        assert_eq!(run(b), base);
    }
}

#[test]
fn scoring_errors_carry_global_indices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = cluster_graph(&mut rng, 12, 2, 0);
    struct Failing;
    impl densekg_core::scorer::RelationScorer for Failing {
        fn model_id(&self) -> String {
            "failing".into()
        }
        fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ScoreVector>, densekg_core::error::ScorerError> {
            Err(densekg_core::error::ScorerError::InvalidScore {
                index: pairs.len() - 1,
                message: "bad".into(),
            })
        }
    }
    let plan = CompletionPlan {
        cluster_sample_size: 2,
        batch_size: 5,
        ..CompletionPlan::default()
    };
    match complete(&g, &Failing, &Thresholds::uniform(0.5), &plan) {
        Err(CompletionError::Scoring { indices, .. }) => assert_eq!(indices, vec![4]),
        other => panic!("{other:?}"),
    }
}

fn score_for(r: Relation, gate: f64) -> ScoreVector {
    let mut p = [0.02; K];
    p[r.index()] = 0.9;
    ScoreVector::new(gate, p).unwrap()
}

#[test]
fn tuning_picks_the_smallest_best_threshold() {
    // xNeed scores: correct at 1.5 and 1.3, wrong at 1.2 and 1.0
    let scores: Vec<ScoreVector> = [0.6, 0.4, 0.3, 0.1].iter().map(|g| score_for(Relation::XNeed, *g)).collect();
    let gold = [
        Label::Linked(Relation::XNeed),
        Label::Linked(Relation::XNeed),
        Label::NoLink,
        Label::Linked(Relation::XIntent),
    ];
    let report = tune_from_scores(&scores, &gold, Objective::Precision);
    let t = report.thresholds.get(Relation::XNeed);
    // any tau in (1.2, 1.3] gives precision 1; the grid's smallest is 1.21
    assert!((t - 1.21).abs() < 1e-12, "{t}");
    assert_eq!(report.thresholds.get(Relation::XIntent), 2.0);
    assert!(report.warnings().count() >= 5);

    // F1 prefers accepting both correct ones and nothing else as well
    let f1 = tune_from_scores(&scores, &gold, Objective::F1);
    assert!((f1.thresholds.get(Relation::XNeed) - 1.21).abs() < 1e-12);
}

#[test]
fn zero_correct_predictions_reject_all() {
    let scores = vec![score_for(Relation::XAfter, 0.5)];
    let report = tune_from_scores(&scores, &[Label::NoLink], Objective::Precision);
    assert_eq!(report.thresholds, Thresholds::uniform(2.0));
    assert_eq!(report.warnings().count(), K);
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 32,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn output_is_sorted_deduplicated_and_new(seed in any::<u64>(), tau in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = cluster_graph(&mut rng, 25, 3, 10);
        let scorer = FnScorer::new("hash", hash_scorer(seed));
        let plan = CompletionPlan { cluster_sample_size: 3, seed, ..CompletionPlan::default() };
        let out = complete(&g, &scorer, &Thresholds::uniform(tau), &plan).unwrap();
        for w in out.windows(2) {
            prop_assert!((&w[0].head, w[0].relation, &w[0].tail) < (&w[1].head, w[1].relation, &w[1].tail));
        }
        for t in &out {
            let (h, tl) = (g.node(&t.head).unwrap(), g.node(&t.tail).unwrap());
            prop_assert!(!g.contains(h, t.relation, tl));
            prop_assert!(t.confidence.unwrap() >= tau);
        }
    }
}
