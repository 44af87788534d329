//! Straightforward reference implementations, written without the
//! library's indexes, to compare the optimized code against.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};

use densekg_core::completion::{Mode, Thresholds};
use densekg_core::graph::{EventId, Graph, Provenance};
use densekg_core::relation::{Relation, K};
use densekg_core::scorer::ScoreVector;

/// Counts k-edge walks with pairwise distinct nodes by listing every walk
/// over the triplet list.
pub fn brute_k_hop(graph: &Graph, k: usize) -> u64 {
    let triplets = graph.triplets();
    let mut out: HashMap<&EventId, Vec<&EventId>> = HashMap::new();
    for t in &triplets {
        out.entry(&t.head).or_default().push(&t.tail);
    }
    let mut walks: Vec<Vec<&EventId>> = graph.events().iter().map(|e| vec![&e.id]).collect();
    for _ in 0..k {
        let mut next = Vec::new();
        for w in &walks {
            for t in out.get(w.last().unwrap()).into_iter().flatten() {
                let mut w2 = w.clone();
                w2.push(t);
                next.push(w2);
            }
        }
        walks = next;
    }
    walks
        .iter()
        .filter(|w| w.iter().collect::<HashSet<_>>().len() == w.len())
        .count() as u64
}

/// A deterministic scorer keyed on a hash of the pair and `salt`.
pub fn hash_scorer(salt: u64) -> impl Fn(&str, &str) -> ScoreVector + Send + Sync + Clone {
    move |h: &str, t: &str| {
        let mut draws = [0u64; K + 1];
        for (i, d) in draws.iter_mut().enumerate() {
            let mut s = DefaultHasher::new();
            (salt, i, h, t).hash(&mut s);
            *d = s.finish() % 1000;
        }
        let gate = draws[0] as f64 / 999.0;
        let w: Vec<f64> = draws[1..].iter().map(|&d| 1.0 + d as f64).collect();
        let sum: f64 = w.iter().sum();
        let mut probs = [0.0; K];
        for k in 0..K {
            probs[k] = w[k] / sum;
        }
        ScoreVector::new(gate, probs).unwrap()
    }
}

/// Every ordered pair of distinct events, filtered by the mode's cluster
/// rule, scored and thresholded. Assumes every cluster is sampled.
/// Returns `(head, relation, tail, confidence)` with confidence as bits.
pub fn brute_complete(
    graph: &Graph,
    score: &dyn Fn(&str, &str) -> ScoreVector,
    thresholds: &Thresholds,
    mode: Mode,
) -> BTreeSet<(String, Relation, String, u64)> {
    let mut member_of: HashMap<&EventId, HashSet<&str>> = HashMap::new();
    for c in graph.clusters() {
        for id in std::iter::once(&c.base).chain(&c.members) {
            member_of.entry(id).or_default().insert(c.id.as_str());
        }
    }
    let triplets = graph.triplets();
    let human: HashSet<(&EventId, &EventId)> = triplets
        .iter()
        .filter(|t| t.provenance == Provenance::Human)
        .map(|t| (&t.head, &t.tail))
        .collect();
    let existing: HashSet<(&EventId, Relation, &EventId)> =
        triplets.iter().map(|t| (&t.head, t.relation, &t.tail)).collect();

    let mut out = BTreeSet::new();
    for u in graph.events() {
        for v in graph.events() {
            if u.id == v.id || human.contains(&(&u.id, &v.id)) {
                continue;
            }
            let (Some(mu), Some(mv)) = (member_of.get(&u.id), member_of.get(&v.id)) else {
                continue;
            };
            let shared = !mu.is_disjoint(mv);
            let eligible = match mode {
                Mode::Intra => shared,
                Mode::Inter => !shared,
                Mode::Both => true,
            };
            if !eligible {
                continue;
            }
            let s = score(&u.text, &v.text);
            let probs = s.probs();
            let mut k = 0;
            for j in 0..K {
                if probs[j] > probs[k] {
                    k = j;
                }
            }
            let r = Relation::ALL[k];
            let conf = s.gate() + probs[k];
            if conf >= thresholds.get(r) && !existing.contains(&(&u.id, r, &v.id)) {
                out.insert((u.id.0.clone(), r, v.id.0.clone(), conf.to_bits()));
            }
        }
    }
    out
}
