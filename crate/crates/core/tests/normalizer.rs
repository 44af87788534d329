use densekg_core::normalizer::{conjugate_third_person, normalize_tail, tag, to_infinitive, RawAnnotation};
use densekg_core::relation::OriginalRelation;
use densekg_testkit::checks;
use proptest::prelude::*;

#[test]
fn golden_corpus() {
    println!("{}", checks::normalization_golden().unwrap());
}

#[test]
fn random_corpus_invariants() {
    println!("{}", checks::normalization_invariants(7, 1000).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn arbitrary_text_invariants(text in "[a-zA-Z_ ']{0,40}", r in 0usize..9) {
        let raw = RawAnnotation::new(text, OriginalRelation::ALL[r]);
        let v = checks::normalization_violations(&raw);
        prop_assert!(v.is_empty(), "{:?}", v);
    }

    #[test]
    fn infinitive_form_normalizes_back(seed in any::<u64>()) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let (text, rel) = densekg_testkit::corpus::random_annotation(&mut rng);
        if let Some(out) = normalize_tail(&RawAnnotation::new(text, rel)) {
            for o in out.grouped_relation.preimage().iter().filter(|o| o.takes_infinitive()) {
                let back = normalize_tail(&RawAnnotation::new(to_infinitive(&out.text), *o));
                prop_assert_eq!(back.as_ref(), Some(&out), "{} via {}", out.text, o);
            }
        }
    }

    #[test]
    fn conjugation_is_idempotent(words in proptest::collection::vec("[a-z]{1,8}", 1..5)) {
        let text = words.join(" ");
        let once = conjugate_third_person(tag(&text));
        prop_assert_eq!(conjugate_third_person(once.clone()), once);
        if !tag(&text).iter().any(|t| t.is_verb()) {
            prop_assert_eq!(conjugate_third_person(tag(&text)), tag(&text));
        }
    }
}
