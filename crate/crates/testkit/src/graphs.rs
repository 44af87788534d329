use densekg_core::graph::{ClusterId, EventId, EventKind, Graph, Provenance};
use densekg_core::relation::Relation;
use rand::Rng;

fn relation(rng: &mut impl Rng) -> Relation {
    Relation::ALL[rng.random_range(0..Relation::ALL.len())]
}

/// A graph shaped like ingest output: `clusters` base events, the remaining
/// events spread over clusters as annotated tails (some shared by two
/// clusters), base-to-tail human edges, plus `extra` human edges between
/// random events.
pub fn cluster_graph(rng: &mut impl Rng, events: usize, clusters: usize, extra: usize) -> Graph {
    assert!(clusters >= 1 && events >= clusters);
    let mut g = Graph::new();
    let mut bases = Vec::new();
    for c in 0..clusters {
        let cid = ClusterId(format!("c{c:03}"));
        let b = g.add_event(&format!("PersonX does thing {c}"), EventKind::Base, &cid).unwrap();
        g.add_cluster(cid.clone(), &b).unwrap();
        bases.push((cid, b));
    }
    let mut all: Vec<EventId> = bases.iter().map(|(_, b)| b.clone()).collect();
    for i in 0..events - clusters {
        let c = rng.random_range(0..clusters);
        let (cid, base) = bases[c].clone();
        let t = g.add_event(&format!("PersonX feels way {i}"), EventKind::AnnotatedTail, &cid).unwrap();
        g.add_member(&cid, &t).unwrap();
        g.add_triplet(&base, relation(rng), &t, Provenance::Human, None).unwrap();
        if clusters > 1 && rng.random_bool(0.1) {
            let (cid2, base2) = bases[(c + 1 + rng.random_range(0..clusters - 1)) % clusters].clone();
            g.add_member(&cid2, &t).unwrap();
            g.add_triplet(&base2, relation(rng), &t, Provenance::Human, None).unwrap();
        }
        all.push(t);
    }
    for _ in 0..extra {
        let h = &all[rng.random_range(0..all.len())];
        let t = &all[rng.random_range(0..all.len())];
        if h != t {
            g.add_triplet(h, relation(rng), t, Provenance::Human, None).unwrap();
        }
    }
    g
}

/// A directed multigraph with `nodes` events and about `edges` random
/// human edges (self-loops and duplicates are dropped).
pub fn random_digraph(rng: &mut impl Rng, nodes: usize, edges: usize) -> Graph {
    let mut g = Graph::new();
    let cid = ClusterId::from("c0");
    let ids: Vec<EventId> = (0..nodes)
        .map(|i| g.add_event(&format!("event {i}"), EventKind::AnnotatedTail, &cid).unwrap())
        .collect();
    for _ in 0..edges {
        let h = rng.random_range(0..nodes);
        let t = rng.random_range(0..nodes);
        if h != t {
            g.add_triplet(&ids[h], relation(rng), &ids[t], Provenance::Human, None).unwrap();
        }
    }
    g
}
