//! In-memory event graph.
//!
//! Events are deduplicated on their normalized text. Internally every event
//! gets a dense [`NodeIx`]; the forward adjacency of a node is kept sorted by
//! `(relation, tail index)` so that traversal order never depends on the
//! insertion history.
//!
//! The graph is built by a single writer. Once construction is done it is
//! only read (`&Graph` is `Sync`), which is how completion and path
//! counting share it across worker threads.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::relation::Relation;

/// Dense node index, valid only for the graph that issued it.
pub type NodeIx = u32;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl EventId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        EventId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClusterId(pub String);

impl ClusterId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClusterId {
    fn from(s: &str) -> Self {
        ClusterId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "base")]
    Base,
    #[serde(rename = "tail")]
    AnnotatedTail,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub id: EventId,
    pub text: String,
    pub kind: EventKind,
    /// Cluster the event was first seen in (or the cluster it is the base of).
    pub cluster: ClusterId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "pred")]
    Predicted,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    pub head: EventId,
    pub relation: Relation,
    pub tail: EventId,
    pub provenance: Provenance,
    /// Combined score for predicted edges, `None` for human ones.
    pub confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cluster {
    pub id: ClusterId,
    pub base: EventId,
    pub members: Vec<EventId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Edge {
    head: NodeIx,
    relation: Relation,
    tail: NodeIx,
    provenance: Provenance,
    confidence: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    events: Vec<Event>,
    by_id: HashMap<EventId, NodeIx>,
    by_text: HashMap<String, NodeIx>,
    edges: Vec<Edge>,
    edge_keys: HashMap<(NodeIx, Relation, NodeIx), usize>,
    adjacency: Vec<Vec<(Relation, NodeIx)>>,
    human_pairs: HashSet<(NodeIx, NodeIx)>,
    linked_pairs: HashSet<(NodeIx, NodeIx)>,
    clusters: Vec<Cluster>,
    cluster_ix: HashMap<ClusterId, usize>,
    next_id: u64,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }

    pub fn triplet_count(&self) -> usize {
        self.edges.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Adds an already-normalized event, returning the id of the existing
    /// event when the text is already present.
    ///
    /// Re-adding a tail text as a base event promotes the stored event to
    /// `Base` and moves its originating cluster to the new one.
    pub fn add_event(
        &mut self,
        text: &str,
        kind: EventKind,
        cluster: &ClusterId,
    ) -> Result<EventId, GraphError> {
        if text.trim().is_empty() {
            return Err(GraphError::EmptyText);
        }
        if let Some(&ix) = self.by_text.get(text) {
            let ev = &mut self.events[ix as usize];
            if kind == EventKind::Base && ev.kind == EventKind::AnnotatedTail {
                ev.kind = EventKind::Base;
                ev.cluster = cluster.clone();
            }
            return Ok(ev.id.clone());
        }
        let id = self.fresh_id();
        self.push_event(Event {
            id: id.clone(),
            text: text.to_string(),
            kind,
            cluster: cluster.clone(),
        });
        Ok(id)
    }

    /// Inserts an event with a caller-chosen id (used when loading dumps).
    pub fn insert_event(&mut self, event: Event) -> Result<(), GraphError> {
        if event.text.trim().is_empty() {
            return Err(GraphError::EmptyText);
        }
        if self.by_id.contains_key(&event.id) || self.by_text.contains_key(&event.text) {
            return Err(GraphError::DuplicateId(event.id.0));
        }
        self.push_event(event);
        Ok(())
    }

    fn push_event(&mut self, event: Event) {
        let ix = self.events.len() as NodeIx;
        self.by_id.insert(event.id.clone(), ix);
        self.by_text.insert(event.text.clone(), ix);
        self.events.push(event);
        self.adjacency.push(Vec::new());
    }

    fn fresh_id(&mut self) -> EventId {
        loop {
            let id = EventId(format!("e{:08}", self.next_id));
            self.next_id += 1;
            if !self.by_id.contains_key(&id) {
                return id;
            }
        }
    }

    /// Inserts a triplet. Returns `Ok(false)` without inserting when the same
    /// `(head, relation, tail)` already exists, whatever its provenance.
    pub fn add_triplet(
        &mut self,
        head: &EventId,
        relation: Relation,
        tail: &EventId,
        provenance: Provenance,
        confidence: Option<f64>,
    ) -> Result<bool, GraphError> {
        let h = self.require(head)?;
        let t = self.require(tail)?;
        if h == t {
            return Err(GraphError::SelfLoop(head.0.clone()));
        }
        match (provenance, confidence) {
            (Provenance::Human, None) => {}
            (Provenance::Predicted, Some(c)) => {
                if !(0.0..=2.0).contains(&c) {
                    return Err(GraphError::BadConfidence(c));
                }
            }
            _ => return Err(GraphError::ConfidenceMismatch),
        }
        if self.edge_keys.contains_key(&(h, relation, t)) {
            return Ok(false);
        }
        self.edge_keys.insert((h, relation, t), self.edges.len());
        self.edges.push(Edge {
            head: h,
            relation,
            tail: t,
            provenance,
            confidence,
        });
        let adj = &mut self.adjacency[h as usize];
        let pos = adj.partition_point(|&e| e < (relation, t));
        adj.insert(pos, (relation, t));
        self.linked_pairs.insert((h, t));
        if provenance == Provenance::Human {
            self.human_pairs.insert((h, t));
        }
        Ok(true)
    }

    fn require(&self, id: &EventId) -> Result<NodeIx, GraphError> {
        self.by_id
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownEvent(id.0.clone()))
    }

    /// Registers a cluster around an existing base event.
    pub fn add_cluster(&mut self, id: ClusterId, base: &EventId) -> Result<(), GraphError> {
        self.require(base)?;
        if self.cluster_ix.contains_key(&id) {
            return Err(GraphError::DuplicateCluster(id.0));
        }
        self.cluster_ix.insert(id.clone(), self.clusters.len());
        self.clusters.push(Cluster {
            id,
            base: base.clone(),
            members: Vec::new(),
        });
        Ok(())
    }

    /// Appends a member to a cluster; members already listed (or equal to the
    /// base) are ignored. Returns whether the member was added.
    pub fn add_member(&mut self, cluster: &ClusterId, member: &EventId) -> Result<bool, GraphError> {
        self.require(member)?;
        let ix = *self
            .cluster_ix
            .get(cluster)
            .ok_or_else(|| GraphError::UnknownEvent(cluster.0.clone()))?;
        let c = &mut self.clusters[ix];
        if &c.base == member || c.members.contains(member) {
            return Ok(false);
        }
        c.members.push(member.clone());
        Ok(true)
    }

    pub fn node(&self, id: &EventId) -> Option<NodeIx> {
        self.by_id.get(id).copied()
    }

    pub fn node_by_text(&self, text: &str) -> Option<NodeIx> {
        self.by_text.get(text).copied()
    }

    pub fn event_at(&self, ix: NodeIx) -> &Event {
        &self.events[ix as usize]
    }

    pub fn event(&self, id: &EventId) -> Option<&Event> {
        self.node(id).map(|ix| self.event_at(ix))
    }

    pub fn event_by_text(&self, text: &str) -> Option<&Event> {
        self.node_by_text(text).map(|ix| self.event_at(ix))
    }

    /// Events in insertion order; `events()[ix]` is the event at `ix`.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Outgoing `(relation, tail)` edges of a node, sorted.
    pub fn out_edges(&self, ix: NodeIx) -> &[(Relation, NodeIx)] {
        &self.adjacency[ix as usize]
    }

    pub fn contains(&self, head: NodeIx, relation: Relation, tail: NodeIx) -> bool {
        self.edge_keys.contains_key(&(head, relation, tail))
    }

    /// Whether a human triplet of any relation runs from `head` to `tail`.
    pub fn human_linked(&self, head: NodeIx, tail: NodeIx) -> bool {
        self.human_pairs.contains(&(head, tail))
    }

    /// Whether any triplet (human or predicted) runs from `head` to `tail`.
    pub fn linked(&self, head: NodeIx, tail: NodeIx) -> bool {
        self.linked_pairs.contains(&(head, tail))
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn cluster(&self, id: &ClusterId) -> Option<&Cluster> {
        self.cluster_ix.get(id).map(|&i| &self.clusters[i])
    }

    /// Node indices of a cluster's base and members, deduplicated and sorted
    /// by event id.
    pub fn cluster_nodes(&self, cluster: &Cluster) -> Vec<NodeIx> {
        let mut nodes: Vec<NodeIx> = std::iter::once(&cluster.base)
            .chain(cluster.members.iter())
            .filter_map(|id| self.node(id))
            .collect();
        nodes.sort_by(|a, b| self.event_at(*a).id.cmp(&self.event_at(*b).id));
        nodes.dedup();
        nodes
    }

    /// All triplets ordered by `(head id, relation, tail id)`.
    pub fn triplets(&self) -> Vec<Triplet> {
        let mut order: Vec<&Edge> = self.edges.iter().collect();
        order.sort_by(|a, b| {
            (&self.event_at(a.head).id, a.relation, &self.event_at(a.tail).id).cmp(&(
                &self.event_at(b.head).id,
                b.relation,
                &self.event_at(b.tail).id,
            ))
        });
        order.into_iter().map(|e| self.to_triplet(e)).collect()
    }

    fn to_triplet(&self, e: &Edge) -> Triplet {
        Triplet {
            head: self.event_at(e.head).id.clone(),
            relation: e.relation,
            tail: self.event_at(e.tail).id.clone(),
            provenance: e.provenance,
            confidence: e.confidence,
        }
    }

    /// Provenance of an existing triplet.
    pub fn provenance(&self, head: &EventId, relation: Relation, tail: &EventId) -> Option<Provenance> {
        let (h, t) = (self.node(head)?, self.node(tail)?);
        self.edge_keys
            .get(&(h, relation, t))
            .map(|&i| self.edges[i].provenance)
    }

    /// Number of adjacency entries; always equal to [`Graph::triplet_count`].
    pub fn adjacency_len(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Events sorted by id.
    pub fn events_sorted(&self) -> Vec<&Event> {
        let mut v: Vec<&Event> = self.events.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Clusters sorted by id.
    pub fn clusters_sorted(&self) -> Vec<&Cluster> {
        let mut v: Vec<&Cluster> = self.clusters.iter().collect();
        v.sort_by(|a, b| a.id.cmp(&b.id));
        v
    }

    /// Clusters each node belongs to (as base or member).
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.events.len()];
        for (ci, c) in self.clusters.iter().enumerate() {
            for ix in self.cluster_nodes(c) {
                out[ix as usize].push(ci);
            }
        }
        out
    }
}

/// Logical equality: same events, triplets and clusters, regardless of the
/// order they were inserted in.
impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.events_sorted() == other.events_sorted()
            && self.triplets() == other.triplets()
            && self.clusters_sorted() == other.clusters_sorted()
    }
}
