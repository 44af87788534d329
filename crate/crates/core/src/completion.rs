//! Link completion over sampled clusters.
//!
//! Candidates are ordered event pairs not already joined by a human edge:
//! inside one cluster (intra) or across two sampled clusters (inter). Each
//! candidate is scored, and its argmax relation is kept when the combined
//! score clears that relation's threshold.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{CompletionError, IoContext, ScorerError};
use crate::eval::AnnotatedSubgraph;
use crate::graph::{Cluster, EventId, Graph, NodeIx, Provenance, Triplet};
use crate::relation::{Label, Relation, K};
use crate::scorer::{decide, RelationScorer, ScoreVector};
use crate::store::write_atomic;

pub const DEFAULT_SAMPLE_SIZE: usize = 100;
pub const DEFAULT_BATCH_SIZE: usize = 256;
/// Threshold for a relation that cannot be tuned.
pub const REJECT_ALL: f64 = 2.0;
const GRID_STEPS: usize = 200;

/// One decision threshold per grouped relation, on the combined-score scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds([f64; K]);

impl Thresholds {
    pub fn uniform(tau: f64) -> Self {
        Thresholds([tau; K])
    }

    pub fn new(values: [f64; K]) -> Result<Self, CompletionError> {
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(CompletionError::Thresholds(format!(
                    "{} threshold {v} must be finite and non-negative",
                    Relation::ALL[k]
                )));
            }
        }
        Ok(Thresholds(values))
    }

    pub fn get(&self, r: Relation) -> f64 {
        self.0[r.index()]
    }

    pub fn set(&mut self, r: Relation, tau: f64) {
        self.0[r.index()] = tau;
    }

    pub fn values(&self) -> &[f64; K] {
        &self.0
    }

    pub fn load(path: &Path) -> Result<Self, CompletionError> {
        let text = std::fs::read_to_string(path).at(path)?;
        let t: Thresholds = serde_json::from_str(&text)
            .map_err(|e| CompletionError::Thresholds(format!("{}: {e}", path.display())))?;
        Thresholds::new(t.0)
    }

    pub fn save(&self, path: &Path) -> Result<(), CompletionError> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("thresholds serialize");
        bytes.push(b'\n');
        Ok(write_atomic(path, &bytes)?)
    }
}

impl Serialize for Thresholds {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(K))?;
        for r in Relation::ALL {
            m.serialize_entry(r.as_str(), &self.get(r))?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for Thresholds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Thresholds;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object with one threshold per grouped relation")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Thresholds, A::Error> {
                let mut values: [Option<f64>; K] = [None; K];
                while let Some(key) = map.next_key::<String>()? {
                    let r: Relation = key.parse().map_err(de::Error::custom)?;
                    if values[r.index()].replace(map.next_value()?).is_some() {
                        return Err(de::Error::custom(format!("duplicate key `{r}`")));
                    }
                }
                let mut out = [0.0; K];
                for r in Relation::ALL {
                    out[r.index()] =
                        values[r.index()].ok_or_else(|| de::Error::custom(format!("missing `{r}`")))?;
                }
                Ok(Thresholds(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Intra,
    Inter,
    Both,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intra" => Ok(Mode::Intra),
            "inter" => Ok(Mode::Inter),
            "both" => Ok(Mode::Both),
            other => Err(format!("unknown completion mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionPlan {
    pub mode: Mode,
    pub cluster_sample_size: usize,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for CompletionPlan {
    fn default() -> Self {
        CompletionPlan {
            mode: Mode::Both,
            cluster_sample_size: DEFAULT_SAMPLE_SIZE,
            seed: 0,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Intra,
    Inter,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidatePair {
    pub head: EventId,
    pub tail: EventId,
    pub origin: Origin,
}

/// Uniformly picks `size` clusters, returned in id order.
pub fn sample_clusters<'g>(
    graph: &'g Graph,
    size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<&'g Cluster>, CompletionError> {
    let all = graph.clusters_sorted();
    if size > all.len() {
        return Err(CompletionError::SampleTooLarge {
            requested: size,
            available: all.len(),
        });
    }
    let mut picked = rand::seq::index::sample(rng, all.len(), size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i]).collect())
}

fn candidate(graph: &Graph, h: NodeIx, t: NodeIx, origin: Origin) -> CandidatePair {
    CandidatePair {
        head: graph.event_at(h).id.clone(),
        tail: graph.event_at(t).id.clone(),
        origin,
    }
}

/// Ordered pairs over the cluster's base and members, minus self pairs and
/// pairs with a human edge in that direction.
pub fn enumerate_intra(graph: &Graph, cluster: &Cluster) -> Vec<CandidatePair> {
    let nodes = graph.cluster_nodes(cluster);
    let mut out = Vec::new();
    for &h in &nodes {
        for &t in &nodes {
            if h != t && !graph.human_linked(h, t) {
                out.push(candidate(graph, h, t, Origin::Intra));
            }
        }
    }
    out
}

/// Ordered pairs whose events sit in two different sampled clusters and
/// never share a cluster, minus pairs with a human edge in that direction.
pub fn enumerate_inter_among(graph: &Graph, clusters: &[&Cluster]) -> Vec<CandidatePair> {
    let member_of = graph.memberships();
    let share = |a: NodeIx, b: NodeIx| {
        let (ma, mb) = (&member_of[a as usize], &member_of[b as usize]);
        ma.iter().any(|c| mb.contains(c))
    };
    let nodes: Vec<Vec<NodeIx>> = clusters.iter().map(|c| graph.cluster_nodes(c)).collect();
    let mut seen = BTreeSet::new();
    for (i, hs) in nodes.iter().enumerate() {
        for (j, ts) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            for &h in hs {
                for &t in ts {
                    if h != t && !share(h, t) && !graph.human_linked(h, t) {
                        seen.insert((h, t));
                    }
                }
            }
        }
    }
    let mut out: Vec<CandidatePair> = seen
        .into_iter()
        .map(|(h, t)| candidate(graph, h, t, Origin::Inter))
        .collect();
    out.sort();
    out
}

pub fn enumerate_inter(
    graph: &Graph,
    plan: &CompletionPlan,
    rng: &mut impl Rng,
) -> Result<Vec<CandidatePair>, CompletionError> {
    if plan.cluster_sample_size < 2 {
        return Err(CompletionError::SampleTooSmall(plan.cluster_sample_size));
    }
    let sampled = sample_clusters(graph, plan.cluster_sample_size, rng)?;
    Ok(enumerate_inter_among(graph, &sampled))
}

/// Every candidate the plan asks for, sorted by (head id, tail id) and
/// deduplicated.
pub fn plan_candidates(graph: &Graph, plan: &CompletionPlan) -> Result<Vec<CandidatePair>, CompletionError> {
    if plan.mode != Mode::Intra && plan.cluster_sample_size < 2 {
        return Err(CompletionError::SampleTooSmall(plan.cluster_sample_size));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let sampled = sample_clusters(graph, plan.cluster_sample_size, &mut rng)?;
    let mut out = Vec::new();
    if plan.mode != Mode::Inter {
        let intra: BTreeSet<CandidatePair> = sampled.iter().flat_map(|c| enumerate_intra(graph, c)).collect();
        out.extend(intra);
    }
    if plan.mode != Mode::Intra {
        out.extend(enumerate_inter_among(graph, &sampled));
    }
    out.sort();
    Ok(out)
}

/// Scores `pairs` in batches of `batch_size`, in parallel across batches,
/// keeping input order. A failing batch aborts with the global indices of
/// the offending pairs.
pub fn score_all(
    scorer: &dyn RelationScorer,
    pairs: &[(&str, &str)],
    batch_size: usize,
) -> Result<Vec<ScoreVector>, CompletionError> {
    let batch_size = batch_size.max(1);
    let results: Vec<Result<Vec<ScoreVector>, CompletionError>> = pairs
        .par_chunks(batch_size)
        .enumerate()
        .map(|(b, chunk)| {
            let start = b * batch_size;
            let scores = scorer.score_batch(chunk).map_err(|source| {
                let indices = match source.pair_index() {
                    Some(i) => vec![start + i],
                    None => (start..start + chunk.len()).collect(),
                };
                CompletionError::Scoring { indices, source }
            })?;
            if scores.len() != chunk.len() {
                return Err(CompletionError::Scoring {
                    indices: (start..start + chunk.len()).collect(),
                    source: ScorerError::Protocol(format!("{} scores for {} pairs", scores.len(), chunk.len())),
                });
            }
            Ok(scores)
        })
        .collect();
    let mut out = Vec::with_capacity(pairs.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Scores the plan's candidates and returns the accepted links as predicted
/// triplets, sorted by (head id, relation, tail id).
pub fn complete(
    graph: &Graph,
    scorer: &dyn RelationScorer,
    thresholds: &Thresholds,
    plan: &CompletionPlan,
) -> Result<Vec<Triplet>, CompletionError> {
    let candidates = plan_candidates(graph, plan)?;
    log::info!("scoring {} candidate pairs", candidates.len());
    let texts: Vec<(&str, &str)> = candidates
        .iter()
        .map(|c| {
            let h = graph.event(&c.head).expect("candidate head");
            let t = graph.event(&c.tail).expect("candidate tail");
            (h.text.as_str(), t.text.as_str())
        })
        .collect();
    let scores = score_all(scorer, &texts, plan.batch_size)?;
    let mut out = Vec::new();
    for (c, s) in candidates.iter().zip(&scores) {
        let Some((relation, conf)) = decide(s, thresholds) else {
            continue;
        };
        let (h, t) = (graph.node(&c.head).unwrap(), graph.node(&c.tail).unwrap());
        if graph.contains(h, relation, t) {
            continue;
        }
        out.push(Triplet {
            head: c.head.clone(),
            relation,
            tail: c.tail.clone(),
            provenance: Provenance::Predicted,
            confidence: Some(conf),
        });
    }
    out.sort_by(|a, b| (&a.head, a.relation, &a.tail).cmp(&(&b.head, b.relation, &b.tail)));
    out.dedup_by(|a, b| a.head == b.head && a.relation == b.relation && a.tail == b.tail);
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Precision of the relation's accepted predictions, requiring at least
    /// one acceptance.
    #[default]
    Precision,
    F1,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationTuning {
    pub relation: Relation,
    pub tau: f64,
    pub gold_pairs: usize,
    pub accepted: usize,
    pub correct: usize,
    pub objective: Option<f64>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuningReport {
    pub thresholds: Thresholds,
    pub relations: Vec<RelationTuning>,
}

impl TuningReport {
    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().filter_map(|r| r.warning.as_deref())
    }
}

/// The grid value `i / 100`.
fn grid(i: usize) -> f64 {
    i as f64 / 100.0
}

/// Per-relation sweep over the grid on `[0, 2]`: the smallest threshold that
/// attains the best objective wins. Relations with no gold pairs, or whose
/// best objective is zero, get [`REJECT_ALL`] and a warning.
pub fn tune_from_scores(
    scores: &[ScoreVector],
    gold: &[Label],
    objective: Objective,
) -> TuningReport {
    let best: Vec<(Relation, f64)> = scores.iter().map(ScoreVector::best).collect();
    let mut thresholds = Thresholds::uniform(REJECT_ALL);
    let mut relations = Vec::with_capacity(K);
    for r in Relation::ALL {
        let gold_pairs = gold.iter().filter(|g| **g == Label::Linked(r)).count();
        let mine: Vec<(f64, bool)> = best
            .iter()
            .zip(gold)
            .filter(|((rel, _), _)| *rel == r)
            .map(|((_, s), g)| (*s, *g == Label::Linked(r)))
            .collect();
        let mut choice: Option<(usize, usize, usize)> = None; // (grid index, accepted, correct)
        if gold_pairs > 0 {
            for i in 0..=GRID_STEPS {
                let tau = grid(i);
                let accepted = mine.iter().filter(|(s, _)| *s >= tau).count();
                let correct = mine.iter().filter(|(s, ok)| *s >= tau && *ok).count();
                if accepted == 0 {
                    break;
                }
                let better = match choice {
                    None => true,
                    Some((_, a, c)) => match objective {
                        // correct/accepted > c/a
                        Objective::Precision => correct * a > c * accepted,
                        // 2c/(a+g) > 2c'/(a'+g)
                        Objective::F1 => correct * (a + gold_pairs) > c * (accepted + gold_pairs),
                    },
                };
                if better {
                    choice = Some((i, accepted, correct));
                }
            }
        }
        let value = |a: usize, c: usize| match objective {
            Objective::Precision => c as f64 / a as f64,
            Objective::F1 => 2.0 * c as f64 / (a + gold_pairs) as f64,
        };
        let tuning = match choice {
            Some((i, a, c)) if c > 0 => RelationTuning {
                relation: r,
                tau: grid(i),
                gold_pairs,
                accepted: a,
                correct: c,
                objective: Some(value(a, c)),
                warning: None,
            },
            other => {
                let warning = if gold_pairs == 0 {
                    format!("{r}: no gold pairs in the dev set; threshold set to {REJECT_ALL}")
                } else if other.is_none() {
                    format!("{r}: no dev pair is predicted as {r}; threshold set to {REJECT_ALL}")
                } else {
                    format!("{r}: no threshold yields a correct prediction; threshold set to {REJECT_ALL}")
                };
                log::warn!("{warning}");
                RelationTuning {
                    relation: r,
                    tau: REJECT_ALL,
                    gold_pairs,
                    accepted: 0,
                    correct: 0,
                    objective: None,
                    warning: Some(warning),
                }
            }
        };
        thresholds.set(r, tuning.tau);
        relations.push(tuning);
    }
    TuningReport { thresholds, relations }
}

pub fn tune_thresholds(
    scorer: &dyn RelationScorer,
    dev: &AnnotatedSubgraph,
    objective: Objective,
    batch_size: usize,
) -> Result<TuningReport, CompletionError> {
    let pairs: Vec<(&str, &str)> = dev.pairs().iter().map(|p| (p.head.as_str(), p.tail.as_str())).collect();
    let scores = score_all(scorer, &pairs, batch_size)?;
    let gold: Vec<Label> = dev.pairs().iter().map(|p| p.gold).collect();
    Ok(tune_from_scores(&scores, &gold, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ClusterId, EventKind};

    fn one_hot(gate: f64, r: Relation) -> ScoreVector {
        let mut p = [0.0; K];
        p[r.index()] = 1.0;
        ScoreVector::new(gate, p).unwrap()
    }

    fn cluster_graph(tails: usize) -> Graph {
        let mut g = Graph::new();
        let c = ClusterId::from("c0");
        let b = g.add_event("PersonX base", EventKind::Base, &c).unwrap();
        g.add_cluster(c.clone(), &b).unwrap();
        for i in 0..tails {
            let t = g.add_event(&format!("PersonX tail {i}"), EventKind::AnnotatedTail, &c).unwrap();
            g.add_member(&c, &t).unwrap();
            g.add_triplet(&b, Relation::XAfter, &t, Provenance::Human, None).unwrap();
        }
        g
    }

    #[test]
    fn intra_counts() {
        let g = cluster_graph(3);
        assert_eq!(enumerate_intra(&g, &g.clusters()[0]).len(), 9);
        let g = cluster_graph(0);
        assert!(enumerate_intra(&g, &g.clusters()[0]).is_empty());
    }

    #[test]
    fn reverse_direction_stays_a_candidate() {
        let g = cluster_graph(1);
        let c = enumerate_intra(&g, &g.clusters()[0]);
        assert_eq!(c.len(), 1);
        assert_eq!(g.event(&c[0].head).unwrap().text, "PersonX tail 0");
    }

    #[test]
    fn thresholds_json_round_trip() {
        let mut t = Thresholds::uniform(0.5);
        t.set(Relation::OPersona, 1.25);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.starts_with("{\"xIntent\":0.5,\"xNeed\""), "{s}");
        assert_eq!(serde_json::from_str::<Thresholds>(&s).unwrap(), t);
        assert!(serde_json::from_str::<Thresholds>("{\"xIntent\":0.5}").is_err());
    }

    #[test]
    fn separable_sweep() {
        let mut scores = Vec::new();
        let mut gold = Vec::new();
        for _ in 0..5 {
            scores.push(one_hot(0.9, Relation::XAfter)); // combined 1.9
            gold.push(Label::Linked(Relation::XAfter));
            scores.push(ScoreVector::new(0.0, [0.0, 0.0, 0.1, 0.0, 0.0, 0.9]).unwrap());
            gold.push(Label::NoLink);
        }
        // NoLink pairs land on oPersona at 0.9; put one decoy on xAfter at 0.1
        scores.push(ScoreVector::new(0.0, [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap());
        gold.push(Label::NoLink);
        let report = tune_from_scores(&scores, &gold, Objective::Precision);
        let tau = report.thresholds.get(Relation::XAfter);
        assert!(tau > 1.0 && tau <= 1.9, "{tau}");
        assert_eq!(tau, 1.01);
        assert_eq!(report.relations[Relation::XAfter.index()].correct, 5);
        assert_eq!(report.thresholds.get(Relation::XNeed), REJECT_ALL);
        assert!(report.warnings().any(|w| w.starts_with("xNeed")));
    }
}
