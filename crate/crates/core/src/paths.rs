//! Multi-hop path statistics and sampling.
//!
//! A k-hop path is a sequence of k edges in which no event repeats. Two
//! edges between the same events under different relations give different
//! paths, so the 1-hop count is the number of triplets.

use std::collections::HashSet;
use std::path::Path as FsPath;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, IoContext};
use crate::graph::{EventId, Graph, NodeIx};
use crate::relation::Relation;
use crate::store::write_atomic;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Path {
    pub nodes: Vec<EventId>,
    pub relations: Vec<Relation>,
}

fn count_from(graph: &Graph, node: NodeIx, left: usize, visited: &mut [bool]) -> u64 {
    if left == 0 {
        return 1;
    }
    visited[node as usize] = true;
    let mut n = 0;
    for &(_, next) in graph.out_edges(node) {
        if !visited[next as usize] {
            n += count_from(graph, next, left - 1, visited);
        }
    }
    visited[node as usize] = false;
    n
}

fn count_range(graph: &Graph, k: usize, sources: std::ops::Range<usize>) -> u64 {
    sources
        .into_par_iter()
        .map_init(
            || vec![false; graph.event_count()],
            |visited, s| count_from(graph, s as NodeIx, k, visited),
        )
        .sum()
}

/// Number of directed simple paths with exactly `k` edges.
pub fn count_k_hop(graph: &Graph, k: usize) -> u64 {
    if k > 3 {
        log::warn!("counting {k}-hop paths; cost grows exponentially with k");
    }
    count_range(graph, k, 0..graph.event_count())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Checkpoint {
    k: usize,
    events: usize,
    triplets: usize,
    next_source: usize,
    count: u64,
}

/// [`count_k_hop`] that processes sources in blocks of `block` and records
/// progress in `checkpoint` after each one. A checkpoint left by an earlier
/// run over the same graph and `k` is resumed.
pub fn count_k_hop_checkpointed(
    graph: &Graph,
    k: usize,
    checkpoint: &FsPath,
    block: usize,
) -> Result<u64, EvalError> {
    let n = graph.event_count();
    let fresh = Checkpoint {
        k,
        events: n,
        triplets: graph.triplet_count(),
        next_source: 0,
        count: 0,
    };
    let mut state = if checkpoint.exists() {
        let text = std::fs::read_to_string(checkpoint).at(checkpoint)?;
        let saved: Checkpoint =
            serde_json::from_str(&text).map_err(|e| EvalError::Checkpoint(e.to_string()))?;
        if (saved.k, saved.events, saved.triplets) != (fresh.k, fresh.events, fresh.triplets)
            || saved.next_source > n
        {
            return Err(EvalError::Checkpoint(format!(
                "{} belongs to a different graph or k",
                checkpoint.display()
            )));
        }
        log::info!("resuming {k}-hop count at source {}", saved.next_source);
        saved
    } else {
        fresh
    };
    let block = block.max(1);
    while state.next_source < n {
        let end = (state.next_source + block).min(n);
        state.count += count_range(graph, k, state.next_source..end);
        state.next_source = end;
        let bytes = serde_json::to_vec(&state).expect("checkpoint serializes");
        write_atomic(checkpoint, &bytes)?;
    }
    Ok(state.count)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub events: usize,
    pub hop1: u64,
    pub hop2: u64,
    pub hop3: u64,
}

impl Stats {
    pub const TSV_HEADER: &'static str = "events\t1-hop\t2-hop\t3-hop";

    pub fn to_tsv(&self) -> String {
        format!(
            "{}\n{}\t{}\t{}\t{}\n",
            Self::TSV_HEADER,
            self.events,
            self.hop1,
            self.hop2,
            self.hop3
        )
    }
}

pub fn stats(graph: &Graph) -> Stats {
    Stats {
        events: graph.event_count(),
        hop1: count_k_hop(graph, 1),
        hop2: count_k_hop(graph, 2),
        hop3: count_k_hop(graph, 3),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleRule {
    Random,
    /// Keep a path only if its first event links directly to its last.
    Heuristic,
}

impl std::str::FromStr for SampleRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SampleRule::Random),
            "heuristic" => Ok(SampleRule::Heuristic),
            other => Err(format!("unknown sampling rule `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub paths: Vec<Path>,
    /// Set when fewer than the requested number of paths were found.
    pub notice: Option<String>,
}

fn walk(graph: &Graph, starts: &[NodeIx], k: usize, rng: &mut impl Rng) -> Option<(Vec<NodeIx>, Vec<Relation>)> {
    let mut nodes = vec![starts[rng.random_range(0..starts.len())]];
    let mut rels = Vec::with_capacity(k);
    while rels.len() < k {
        let here = *nodes.last().unwrap();
        let open: Vec<&(Relation, NodeIx)> = graph
            .out_edges(here)
            .iter()
            .filter(|(_, t)| !nodes.contains(t))
            .collect();
        if open.is_empty() {
            return None;
        }
        let &(r, t) = open[rng.random_range(0..open.len())];
        nodes.push(t);
        rels.push(r);
    }
    Some((nodes, rels))
}

/// Collects up to `n` distinct k-hop simple paths by random walks from
/// uniformly chosen events with outgoing edges, giving up after a bounded
/// number of walks.
pub fn sample_paths(graph: &Graph, k: usize, n: usize, rule: SampleRule, rng: &mut impl Rng) -> PathSample {
    let starts: Vec<NodeIx> = (0..graph.event_count() as NodeIx)
        .filter(|&i| !graph.out_edges(i).is_empty())
        .collect();
    let mut seen = HashSet::new();
    let mut paths = Vec::new();
    let budget = 1000.max(n.saturating_mul(100));
    if k > 0 && !starts.is_empty() {
        for _ in 0..budget {
            if paths.len() >= n {
                break;
            }
            let Some((nodes, rels)) = walk(graph, &starts, k, rng) else {
                continue;
            };
            if rule == SampleRule::Heuristic && !graph.linked(nodes[0], nodes[k]) {
                continue;
            }
            if seen.insert((nodes.clone(), rels.clone())) {
                paths.push(Path {
                    nodes: nodes.iter().map(|&i| graph.event_at(i).id.clone()).collect(),
                    relations: rels,
                });
            }
        }
    }
    let notice = (paths.len() < n).then(|| {
        format!(
            "found {} of {n} requested {k}-hop paths under the {} rule",
            paths.len(),
            match rule {
                SampleRule::Random => "random",
                SampleRule::Heuristic => "heuristic",
            }
        )
    });
    PathSample { paths, notice }
}

/// `head<TAB>relation<TAB>tail<TAB>...` with event texts, one path per line.
pub fn paths_to_tsv(graph: &Graph, paths: &[Path]) -> String {
    let mut out = String::new();
    for p in paths {
        out.push_str(&graph.event(&p.nodes[0]).expect("path node").text);
        for (r, id) in p.relations.iter().zip(&p.nodes[1..]) {
            out.push('\t');
            out.push_str(r.as_str());
            out.push('\t');
            out.push_str(&graph.event(id).expect("path node").text);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ClusterId, EventKind, Provenance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> Graph {
        let mut g = Graph::new();
        let c = ClusterId::from("c0");
        let ids: Vec<_> = ["a", "b", "c", "d"]
            .iter()
            .map(|t| g.add_event(t, EventKind::AnnotatedTail, &c).unwrap())
            .collect();
        for w in ids.windows(2) {
            g.add_triplet(&w[0], Relation::XAfter, &w[1], Provenance::Human, None).unwrap();
        }
        g
    }

    #[test]
    fn chain_counts() {
        let g = chain();
        assert_eq!([1, 2, 3].map(|k| count_k_hop(&g, k)), [3, 2, 1]);
        let s = stats(&g);
        assert_eq!(s.to_tsv(), "events\t1-hop\t2-hop\t3-hop\n4\t3\t2\t1\n");
        assert_eq!(stats(&Graph::new()), Stats::default());
    }

    #[test]
    fn cycles_are_not_paths() {
        let mut g = chain();
        let (a, d) = (g.node_by_text("a").unwrap(), g.node_by_text("d").unwrap());
        let (a, d) = (g.event_at(a).id.clone(), g.event_at(d).id.clone());
        g.add_triplet(&d, Relation::XNeed, &a, Provenance::Human, None).unwrap();
        // a->b->c->d->a: every rotation of the 4-cycle
        assert_eq!(count_k_hop(&g, 3), 4);
        assert_eq!(count_k_hop(&g, 4), 0);
    }

    #[test]
    fn checkpoint_resumes() {
        let g = chain();
        let dir = tempfile::tempdir().unwrap();
        let cp = dir.path().join("count.json");
        assert_eq!(count_k_hop_checkpointed(&g, 2, &cp, 1).unwrap(), 2);
        // a finished checkpoint is reused as is
        assert_eq!(count_k_hop_checkpointed(&g, 2, &cp, 1).unwrap(), 2);
        assert!(count_k_hop_checkpointed(&g, 3, &cp, 1).is_err());
    }

    #[test]
    fn heuristic_needs_shortcuts() {
        let g = chain();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = sample_paths(&g, 2, 5, SampleRule::Heuristic, &mut rng);
        assert!(s.paths.is_empty());
        assert!(s.notice.is_some());
        let s = sample_paths(&g, 2, 2, SampleRule::Random, &mut rng);
        assert_eq!(s.paths.len(), 2);
        assert!(s.notice.is_none());
    }
}
