//! Training-set assembly for the relation scorer: human positives from the
//! training clusters plus random and persona negatives labelled `NoLink`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, FormatError, IoContext};
use crate::graph::{ClusterId, Graph, NodeIx, Provenance, Triplet};
use crate::relation::Label;
use crate::store::{for_each_record, string_field, to_jsonl, write_atomic};

/// Negatives per positive, from the published training-set composition.
pub const DEFAULT_RANDOM_RATIO: f64 = 1_890_350.0 / 463_264.0;
pub const DEFAULT_PERSONA_RATIO: f64 = 756_140.0 / 463_264.0;
pub const MAX_RETRIES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Positive,
    RandomNeg,
    PersonaNeg,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Positive => "positive",
            Source::RandomNeg => "random_neg",
            Source::PersonaNeg => "persona_neg",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub head: String,
    pub tail: String,
    pub label: Label,
    pub source: Source,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub random_ratio: f64,
    pub persona_ratio: f64,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            random_ratio: DEFAULT_RANDOM_RATIO,
            persona_ratio: DEFAULT_PERSONA_RATIO,
            seed: 0,
        }
    }
}

/// `floor(ratio * n)`, tolerant of ratios like 4.081 whose product with a
/// round `n` lands a hair below the integer in binary floating point.
pub fn negative_count(ratio: f64, n: usize) -> usize {
    (ratio * n as f64 + 1e-9).floor() as usize
}

/// Human triplets whose head is the base event of one of `clusters`, in the
/// graph's canonical triplet order.
pub fn split_positives(graph: &Graph, clusters: &[ClusterId]) -> Result<Vec<Triplet>, DatasetError> {
    let mut bases = HashSet::new();
    for id in clusters {
        let c = graph
            .cluster(id)
            .ok_or_else(|| DatasetError::UnknownCluster(id.0.clone()))?;
        bases.insert(c.base.clone());
    }
    Ok(graph
        .triplets()
        .into_iter()
        .filter(|t| t.provenance == Provenance::Human && bases.contains(&t.head))
        .collect())
}

struct Sampler<'g> {
    graph: &'g Graph,
    persona_tails: Vec<NodeIx>,
    taken: HashSet<(NodeIx, NodeIx)>,
}

impl<'g> Sampler<'g> {
    fn new(graph: &'g Graph) -> Self {
        let persona_tails = (0..graph.event_count() as NodeIx)
            .filter(|&ix| graph.event_at(ix).text.split(' ').any(|w| w == "is"))
            .collect();
        Sampler {
            graph,
            persona_tails,
            taken: HashSet::new(),
        }
    }

    fn admissible(&self, head: NodeIx, tail: NodeIx, candidate: NodeIx) -> bool {
        candidate != head
            && candidate != tail
            && !self.graph.human_linked(head, candidate)
            && !self.taken.contains(&(head, candidate))
    }

    fn draw(
        &mut self,
        positive: &Triplet,
        pool: Option<&[NodeIx]>,
        source: Source,
        rng: &mut impl Rng,
    ) -> Result<TrainingExample, DatasetError> {
        let g = self.graph;
        let head = g.node(&positive.head).expect("positive head in graph");
        let tail = g.node(&positive.tail).expect("positive tail in graph");
        let n = pool.map_or(g.event_count(), <[NodeIx]>::len);
        if n > 0 {
            for _ in 0..MAX_RETRIES {
                let i = rng.random_range(0..n);
                let candidate = pool.map_or(i as NodeIx, |p| p[i]);
                if self.admissible(head, tail, candidate) {
                    self.taken.insert((head, candidate));
                    return Ok(TrainingExample {
                        head: g.event_at(head).text.clone(),
                        tail: g.event_at(candidate).text.clone(),
                        label: Label::NoLink,
                        source,
                    });
                }
            }
        }
        Err(DatasetError::Unsatisfiable {
            head: positive.head.0.clone(),
            attempts: MAX_RETRIES,
        })
    }
}

/// Replaces the tail of `positive` with a uniformly drawn event that is not
/// the head, not the original tail, and not human-linked from the head.
pub fn sample_random_negative(
    graph: &Graph,
    positive: &Triplet,
    rng: &mut impl Rng,
) -> Result<TrainingExample, DatasetError> {
    Sampler::new(graph).draw(positive, None, Source::RandomNeg, rng)
}

/// Like [`sample_random_negative`] but draws only among events containing
/// the token `is`, for xPersona/oPersona positives.
pub fn sample_persona_negative(
    graph: &Graph,
    positive: &Triplet,
    rng: &mut impl Rng,
) -> Result<TrainingExample, DatasetError> {
    if !positive.relation.is_persona() {
        return Err(DatasetError::NotPersona(positive.relation));
    }
    let mut sampler = Sampler::new(graph);
    if sampler.persona_tails.is_empty() {
        return Err(DatasetError::NoPersonaTail);
    }
    let pool = std::mem::take(&mut sampler.persona_tails);
    sampler.draw(positive, Some(&pool), Source::PersonaNeg, rng)
}

/// Positives of the split, then `floor(random_ratio * P)` random negatives
/// with heads cycling through the positives, then `floor(persona_ratio * P)`
/// persona negatives cycling through the persona positives. A negative pair
/// already emitted is redrawn. The result is shuffled with the same seed.
pub fn build_training_set(
    graph: &Graph,
    split: &[ClusterId],
    config: &SamplingConfig,
) -> Result<Vec<TrainingExample>, DatasetError> {
    for r in [config.random_ratio, config.persona_ratio] {
        if !r.is_finite() || r < 0.0 {
            return Err(DatasetError::BadRatio);
        }
    }
    let positives = split_positives(graph, split)?;
    if positives.is_empty() {
        return Err(DatasetError::EmptySplit);
    }
    let p = positives.len();
    let n_random = negative_count(config.random_ratio, p);
    let n_persona = negative_count(config.persona_ratio, p);

    let mut out: Vec<TrainingExample> = positives
        .iter()
        .map(|t| TrainingExample {
            head: graph.event(&t.head).expect("head").text.clone(),
            tail: graph.event(&t.tail).expect("tail").text.clone(),
            label: Label::Linked(t.relation),
            source: Source::Positive,
        })
        .collect();
    out.reserve(n_random + n_persona);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sampler = Sampler::new(graph);
    for i in 0..n_random {
        out.push(sampler.draw(&positives[i % p], None, Source::RandomNeg, &mut rng)?);
    }
    if n_persona > 0 {
        let persona: Vec<&Triplet> = positives.iter().filter(|t| t.relation.is_persona()).collect();
        if persona.is_empty() {
            return Err(DatasetError::NoPersonaPositives);
        }
        if sampler.persona_tails.is_empty() {
            return Err(DatasetError::NoPersonaTail);
        }
        let pool = std::mem::take(&mut sampler.persona_tails);
        for i in 0..n_persona {
            let pos = persona[i % persona.len()];
            out.push(sampler.draw(pos, Some(&pool), Source::PersonaNeg, &mut rng)?);
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn write_training_set(path: &Path, examples: &[TrainingExample]) -> Result<(), DatasetError> {
    Ok(write_atomic(path, &to_jsonl(examples))?)
}

pub fn read_training_set(path: &Path) -> Result<Vec<TrainingExample>, DatasetError> {
    let mut out = Vec::new();
    for_each_record::<DatasetError, _>(path, |line, obj| {
        let head = string_field(obj, "head", path, line)?;
        let tail = string_field(obj, "tail", path, line)?;
        let label: Label = string_field(obj, "label", path, line)?
            .parse()
            .map_err(|e: crate::error::ParseLabelError| FormatError::new(path, line, "label", e.to_string()))?;
        let source = match string_field(obj, "source", path, line)?.as_str() {
            "positive" => Source::Positive,
            "random_neg" => Source::RandomNeg,
            "persona_neg" => Source::PersonaNeg,
            other => {
                return Err(FormatError::new(path, line, "source", format!("unknown source `{other}`")).into())
            }
        };
        if (source == Source::Positive) != (label != Label::NoLink) {
            return Err(FormatError::new(path, line, "label", "label does not match source").into());
        }
        if head.is_empty() || tail.is_empty() {
            return Err(FormatError::new(path, line, "head", "empty text").into());
        }
        out.push(TrainingExample {
            head,
            tail,
            label,
            source,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Cluster ids, one per line; blank lines are ignored.
pub fn read_split(path: &Path) -> Result<Vec<ClusterId>, DatasetError> {
    let text = fs::read_to_string(path).at(path)?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(ClusterId::from)
        .collect())
}

pub fn write_split(path: &Path, clusters: &[ClusterId]) -> Result<(), DatasetError> {
    let mut text = String::new();
    for c in clusters {
        text.push_str(c.as_str());
        text.push('\n');
    }
    Ok(write_atomic(path, text.as_bytes())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EventKind;
    use crate::relation::Relation;

    #[test]
    fn default_ratios() {
        assert!((DEFAULT_RANDOM_RATIO - 4.081).abs() < 5e-4);
        assert!((DEFAULT_PERSONA_RATIO - 1.632).abs() < 5e-4);
        assert_eq!(negative_count(DEFAULT_RANDOM_RATIO, 463_264), 1_890_350);
        assert_eq!(negative_count(DEFAULT_PERSONA_RATIO, 463_264), 756_140);
        assert_eq!(negative_count(4.081, 100), 408);
        assert_eq!(negative_count(1.632, 100), 163);
    }

    #[test]
    fn two_event_graph_is_unsatisfiable() {
        let mut g = Graph::new();
        let c = ClusterId::from("c0");
        let h = g.add_event("PersonX eats", EventKind::Base, &c).unwrap();
        let t = g.add_event("PersonX is full", EventKind::AnnotatedTail, &c).unwrap();
        g.add_cluster(c, &h).unwrap();
        g.add_triplet(&h, Relation::XPersona, &t, Provenance::Human, None).unwrap();
        let pos = g.triplets()[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_random_negative(&g, &pos, &mut rng),
            Err(DatasetError::Unsatisfiable { .. })
        ));
    }

    #[test]
    fn persona_requires_persona_positive() {
        let mut g = Graph::new();
        let c = ClusterId::from("c0");
        let h = g.add_event("PersonX eats", EventKind::Base, &c).unwrap();
        let t = g.add_event("PersonX sleeps", EventKind::AnnotatedTail, &c).unwrap();
        g.add_triplet(&h, Relation::XAfter, &t, Provenance::Human, None).unwrap();
        let pos = g.triplets()[0].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_persona_negative(&g, &pos, &mut rng),
            Err(DatasetError::NotPersona(Relation::XAfter))
        ));
    }
}
