//! Templated relation data: each grouped relation has its own tail
//! template and vocabulary, and NoLink tails come from unrelated
//! scene descriptions.

use densekg_core::dataset::{Source, TrainingExample};
use densekg_core::relation::{Label, Relation};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HEAD_VERBS: &[&str] = &[
    "visits", "calls", "meets", "helps", "hugs", "paints", "cooks", "finds", "buys", "writes",
];
const HEAD_OBJECTS: &[&str] = &[
    "PersonY", "a friend", "the house", "a cake", "the dog", "a letter", "the car", "a song",
    "the garden", "a book",
];

fn template(r: Relation) -> (&'static str, &'static [&'static str]) {
    match r {
        Relation::XIntent => ("PersonX wants to", &["be kind", "be liked", "feel useful", "show love", "be noticed"]),
        Relation::XNeed => ("PersonX needs", &["money", "time", "a ride", "directions", "a plan"]),
        Relation::XAfter => ("PersonX then", &["smiles", "rests", "goes home", "sleeps", "laughs"]),
        Relation::OAfter => ("PersonY then", &["thanks PersonX", "waves back", "replies", "nods", "cries"]),
        Relation::XPersona => ("PersonX is", &["generous", "caring", "helpful", "friendly", "thoughtful"]),
        Relation::OPersona => ("PersonY is", &["grateful", "touched", "pleased", "surprised", "moved"]),
    }
}

const NOISE: &[&str] = &[
    "the river is cold", "a train leaves early", "clouds cover the hill", "the shop is closed",
    "snow falls at night", "the printer is broken", "a bus waits outside", "leaves drift by",
    "the clock is slow", "rain hits the window",
];

/// `n` examples, 60% linked (evenly over the six relations) and 40% NoLink.
pub fn templated_examples(n: usize, seed: u64) -> Vec<TrainingExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positives = n * 3 / 5;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let head = format!(
            "PersonX {} {}",
            HEAD_VERBS.choose(&mut rng).unwrap(),
            HEAD_OBJECTS.choose(&mut rng).unwrap()
        );
        if i < positives {
            let r = Relation::ALL[i % Relation::ALL.len()];
            let (prefix, words) = template(r);
            out.push(TrainingExample {
                head,
                tail: format!("{prefix} {}", words.choose(&mut rng).unwrap()),
                label: Label::Linked(r),
                source: Source::Positive,
            });
        } else {
            let tail = if rng.random_bool(0.5) {
                NOISE.choose(&mut rng).unwrap().to_string()
            } else {
                format!("{} {}", NOISE.choose(&mut rng).unwrap(), NOISE.choose(&mut rng).unwrap())
            };
            out.push(TrainingExample {
                head,
                tail,
                label: Label::NoLink,
                source: Source::RandomNeg,
            });
        }
    }
    out.shuffle(&mut rng);
    out
}
