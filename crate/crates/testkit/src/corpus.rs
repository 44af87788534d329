//! Random raw annotations in the shapes crowd workers produce.

use densekg_core::normalizer::VerbLexicon;
use densekg_core::relation::OriginalRelation;
use rand::seq::IndexedRandom;
use rand::Rng;

const SUBJECTS: &[&str] = &["", "", "", "He", "she", "They", "PersonX", "personx", "PersonY", "X", "I", "we"];
const ADVERBS: &[&str] = &["really", "quickly", "just", "finally", "happily"];
const WORDS: &[&str] = &[
    "happy", "sad", "tired", "loving", "calm", "money", "water", "a car", "the dog", "home",
    "PersonY", "personY's book", "is", "are", "was", "to", "and", "with", "it", "them", "nice",
    "friends", "at work", "very", "running", "excited", "about", "the", "game",
];
const JUNK: &[&str] = &["none", "None", " none ", "___", "fills in the ___", "", "   "];

fn verb_form(lemma: &str, rng: &mut impl Rng) -> String {
    match rng.random_range(0..4) {
        0 => lemma.to_string(),
        1 => densekg_core::normalizer::third_person(lemma),
        2 => format!("{lemma}ed"),
        _ => format!("{lemma}ing"),
    }
}

pub fn random_annotation(rng: &mut impl Rng) -> (String, OriginalRelation) {
    let relation = *OriginalRelation::ALL.choose(rng).unwrap();
    if rng.random_bool(0.05) {
        return (JUNK.choose(rng).unwrap().to_string(), relation);
    }
    let lemmas = VerbLexicon::bundled().lemmas();
    let mut parts: Vec<String> = Vec::new();
    let subj = SUBJECTS.choose(rng).unwrap();
    if !subj.is_empty() {
        parts.push(subj.to_string());
    }
    if rng.random_bool(0.4) {
        parts.push("to".into());
    }
    if rng.random_bool(0.15) {
        parts.push(ADVERBS.choose(rng).unwrap().to_string());
    }
    if rng.random_bool(0.7) {
        parts.push(verb_form(lemmas.choose(rng).unwrap(), rng));
    }
    for _ in 0..rng.random_range(0..4) {
        parts.push(WORDS.choose(rng).unwrap().to_string());
    }
    let mut text = parts.join(" ");
    if rng.random_bool(0.1) {
        text = text.to_uppercase();
    }
    if rng.random_bool(0.1) {
        text = format!("  {}  ", text.replace(' ', "   "));
    }
    (text, relation)
}
