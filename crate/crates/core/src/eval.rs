//! Precision against an annotated subgraph, plus the exports that feed
//! human evaluation and downstream generator training.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, FormatError, IoContext};
use crate::graph::{Graph, Triplet};
use crate::normalizer::{normalize_tail, to_infinitive, RawAnnotation};
use crate::relation::{Label, OriginalRelation, Relation};
use crate::store::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Intra,
    Inter,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Intra => "intra",
            Scope::Inter => "inter",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldPair {
    pub head: String,
    pub tail: String,
    pub gold: Label,
    pub scope: Scope,
}

/// Gold labels for (head, tail) event texts; each pair appears once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedSubgraph {
    pairs: Vec<GoldPair>,
    index: HashMap<(String, String), usize>,
}

pub const GOLD_HEADER: &str = "head\ttail\tgold\tscope";

impl AnnotatedSubgraph {
    pub fn new(pairs: Vec<GoldPair>) -> Result<Self, EvalError> {
        let mut index = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if index.insert((p.head.clone(), p.tail.clone()), i).is_some() {
                return Err(EvalError::DuplicatePair {
                    head: p.head.clone(),
                    tail: p.tail.clone(),
                });
            }
        }
        Ok(AnnotatedSubgraph { pairs, index })
    }

    pub fn pairs(&self) -> &[GoldPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, head: &str, tail: &str) -> Option<&GoldPair> {
        self.index
            .get(&(head.to_string(), tail.to_string()))
            .map(|&i| &self.pairs[i])
    }

    /// Counts per (gold label, scope), the shape of the annotated-subgraph
    /// statistics table.
    pub fn label_counts(&self) -> BTreeMap<(Label, Scope), usize> {
        let mut out = BTreeMap::new();
        for p in &self.pairs {
            *out.entry((p.gold, p.scope)).or_default() += 1;
        }
        out
    }

    pub fn read_tsv(path: &Path) -> Result<Self, EvalError> {
        let file = File::open(path).at(path)?;
        let mut pairs = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line_no = i + 1;
            let line = line.at(path)?;
            if line.trim().is_empty() || (line_no == 1 && line == GOLD_HEADER) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(FormatError::new(path, line_no, "<tsv>", format!("expected 4 columns, got {}", cols.len())).into());
            }
            for (name, v) in [("head", cols[0]), ("tail", cols[1])] {
                if v.trim().is_empty() {
                    return Err(FormatError::new(path, line_no, name, "empty text").into());
                }
            }
            let gold: Label = cols[2]
                .parse()
                .map_err(|e: crate::error::ParseLabelError| FormatError::new(path, line_no, "gold", e.to_string()))?;
            let scope = match cols[3] {
                "intra" => Scope::Intra,
                "inter" => Scope::Inter,
                other => {
                    return Err(FormatError::new(path, line_no, "scope", format!("unknown scope `{other}`")).into())
                }
            };
            pairs.push(GoldPair {
                head: cols[0].to_string(),
                tail: cols[1].to_string(),
                gold,
                scope,
            });
        }
        Self::new(pairs)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{GOLD_HEADER}\n");
        for p in &self.pairs {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", p.head, p.tail, p.gold, p.scope.as_str()));
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<(), EvalError> {
        Ok(write_atomic(path, self.to_tsv().as_bytes())?)
    }

    /// Checks that every pair whose events are both in `graph` is scoped
    /// `intra` exactly when the two events share a cluster.
    pub fn check_scopes(&self, graph: &Graph) -> Result<(), EvalError> {
        let member_of = graph.memberships();
        for p in &self.pairs {
            let (Some(h), Some(t)) = (graph.node_by_text(&p.head), graph.node_by_text(&p.tail)) else {
                continue;
            };
            let shared = member_of[h as usize].iter().any(|c| member_of[t as usize].contains(c));
            let expected = if shared { Scope::Intra } else { Scope::Inter };
            if expected != p.scope {
                return Err(EvalError::ScopeMismatch {
                    head: p.head.clone(),
                    tail: p.tail.clone(),
                    expected: expected.as_str(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub predicted: usize,
    pub correct: usize,
}

impl Counts {
    /// `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        (self.predicted > 0).then(|| self.correct as f64 / self.predicted as f64)
    }

    fn add(&mut self, correct: bool) {
        self.predicted += 1;
        self.correct += usize::from(correct);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub total: Option<f64>,
    pub intra: Option<f64>,
    pub inter: Option<f64>,
    pub counts: BTreeMap<&'static str, Counts>,
    pub per_relation: BTreeMap<&'static str, Counts>,
    /// Predictions whose pair has no gold label; excluded from precision.
    pub uncovered: usize,
}

/// A prediction is correct when the gold label of its (head, tail) pair is
/// the predicted relation. Gold `NoLink` counts against it.
pub fn evaluate_precision(graph: &Graph, predicted: &[Triplet], gold: &AnnotatedSubgraph) -> PrecisionReport {
    let mut total = Counts::default();
    let mut scoped: BTreeMap<Scope, Counts> = BTreeMap::new();
    let mut per_relation: BTreeMap<&'static str, Counts> =
        Relation::ALL.iter().map(|r| (r.as_str(), Counts::default())).collect();
    let mut uncovered = 0;
    for t in predicted {
        let texts = graph.event(&t.head).zip(graph.event(&t.tail));
        let Some(g) = texts.and_then(|(h, tl)| gold.get(&h.text, &tl.text)) else {
            uncovered += 1;
            continue;
        };
        let ok = g.gold == Label::Linked(t.relation);
        total.add(ok);
        scoped.entry(g.scope).or_default().add(ok);
        per_relation.get_mut(t.relation.as_str()).unwrap().add(ok);
    }
    let intra = scoped.get(&Scope::Intra).copied().unwrap_or_default();
    let inter = scoped.get(&Scope::Inter).copied().unwrap_or_default();
    PrecisionReport {
        total: total.precision(),
        intra: intra.precision(),
        inter: inter.precision(),
        counts: [("total", total), ("intra", intra), ("inter", inter)].into_iter().collect(),
        per_relation,
        uncovered,
    }
}

pub const HUMAN_EVAL_HEADER: &str = "head\trelation\ttail\tconfidence\tjudgment";

/// Uniform sample of `n` predictions (kept in input order) as a TSV with an
/// empty judgment column.
pub fn export_human_eval_sample(
    graph: &Graph,
    predicted: &[Triplet],
    n: usize,
    rng: &mut impl Rng,
) -> Result<String, EvalError> {
    if n > predicted.len() {
        return Err(EvalError::SampleTooLarge {
            requested: n,
            available: predicted.len(),
        });
    }
    let mut picked = rand::seq::index::sample(rng, predicted.len(), n).into_vec();
    picked.sort_unstable();
    let mut out = format!("{HUMAN_EVAL_HEADER}\n");
    for i in picked {
        let t = &predicted[i];
        let text = |id| graph.event(id).map_or_else(|| id.0.clone(), |e| e.text.clone());
        let conf = t.confidence.map(|c| format!("{c:.4}")).unwrap_or_default();
        out.push_str(&format!("{}\t{}\t{}\t{conf}\t\n", text(&t.head), t.relation, text(&t.tail)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegroupedTriplet {
    pub head: String,
    pub relation: OriginalRelation,
    pub tail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Degrouped {
    pub triplets: Vec<DegroupedTriplet>,
    /// Predictions whose rewritten tail would not normalize back to the
    /// stored one; left out of the export.
    pub skipped: usize,
}

/// Reads the relation distribution written by ingest: a JSON object from
/// original relation names to counts.
pub fn read_distribution(path: &Path) -> Result<BTreeMap<OriginalRelation, u64>, EvalError> {
    let text = std::fs::read_to_string(path).at(path)?;
    let raw: BTreeMap<String, u64> =
        serde_json::from_str(&text).map_err(|e| FormatError::new(path, 1, "<json>", e.to_string()))?;
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<OriginalRelation>()
                .map(|r| (r, v))
                .map_err(|e| FormatError::new(path, 1, k.clone(), e.to_string()).into())
        })
        .collect()
}

/// Maps each grouped relation back to one of its original relations, drawn
/// in proportion to `distribution` restricted to the relation's preimage,
/// and rewrites the tail into the annotation style of that relation.
pub fn degroup_relations(
    graph: &Graph,
    predicted: &[Triplet],
    distribution: &BTreeMap<OriginalRelation, u64>,
    rng: &mut impl Rng,
) -> Result<Degrouped, EvalError> {
    let used: HashSet<Relation> = predicted.iter().map(|t| t.relation).collect();
    for r in Relation::ALL.into_iter().filter(|r| used.contains(r) && r.preimage().len() > 1) {
        let mut mass = 0;
        for o in r.preimage() {
            mass += distribution
                .get(o)
                .ok_or_else(|| EvalError::MissingRelation(o.as_str().to_string()))?;
        }
        if mass == 0 {
            return Err(EvalError::MissingRelation(format!("{r} (all members have zero count)")));
        }
    }
    let mut out = Degrouped::default();
    for t in predicted {
        let (Some(head), Some(tail)) = (graph.event(&t.head), graph.event(&t.tail)) else {
            out.skipped += 1;
            continue;
        };
        let pre = t.relation.preimage();
        let original = if pre.len() == 1 {
            pre[0]
        } else {
            let total: u64 = pre.iter().map(|o| distribution[o]).sum();
            let mut x = rng.random_range(0..total);
            let mut chosen = pre[pre.len() - 1];
            for o in pre {
                if x < distribution[o] {
                    chosen = *o;
                    break;
                }
                x -= distribution[o];
            }
            chosen
        };
        let rewritten = if original.takes_infinitive() {
            to_infinitive(&tail.text)
        } else {
            tail.text.clone()
        };
        let back = normalize_tail(&RawAnnotation::new(rewritten.as_str(), original));
        if back.as_ref().map(|n| (n.text.as_str(), n.grouped_relation)) != Some((tail.text.as_str(), t.relation)) {
            out.skipped += 1;
            continue;
        }
        out.triplets.push(DegroupedTriplet {
            head: head.text.clone(),
            relation: original,
            tail: rewritten,
        });
    }
    Ok(out)
}

pub fn degrouped_to_tsv(triplets: &[DegroupedTriplet]) -> String {
    let mut out = String::from("head\trelation\ttail\n");
    for t in triplets {
        out.push_str(&format!("{}\t{}\t{}\n", t.head, t.relation, t.tail));
    }
    out
}
