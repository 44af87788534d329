//! JSONL persistence for graphs and triplet lists.
//!
//! A graph directory holds `events.jsonl`, `triplets.jsonl` and
//! `clusters.jsonl`. Records are written in a fixed order (events and
//! clusters by id, triplets by `(head, relation, tail)`) so two dumps of the
//! same logical graph are byte-identical.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{FormatError, GraphError, IoContext, IoError};
use crate::graph::{ClusterId, Event, EventId, EventKind, Graph, Provenance, Triplet};
use crate::relation::Relation;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const TRIPLETS_FILE: &str = "triplets.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.jsonl";

#[derive(Serialize)]
struct EventRecord<'a> {
    id: &'a str,
    text: &'a str,
    kind: EventKind,
    cluster: &'a str,
}

#[derive(Serialize)]
struct TripletRecord<'a> {
    head: &'a str,
    rel: Relation,
    tail: &'a str,
    src: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    conf: Option<f64>,
}

#[derive(Serialize)]
struct ClusterRecord<'a> {
    id: &'a str,
    base: &'a str,
    members: Vec<&'a str>,
}

/// Writes `contents` next to `path` and renames it into place, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).at(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(File::create(&tmp).at(&tmp)?);
        w.write_all(contents).at(&tmp)?;
        w.flush().at(&tmp)?;
    }
    fs::rename(&tmp, path).at(path)
}

/// Serializes each record as one JSON line.
pub fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &r).expect("records serialize");
        out.push(b'\n');
    }
    out
}

pub fn save_graph(graph: &Graph, dir: &Path) -> Result<(), GraphError> {
    fs::create_dir_all(dir).at(dir)?;
    let events = to_jsonl(graph.events_sorted().into_iter().map(|e| EventRecord {
        id: e.id.as_str(),
        text: &e.text,
        kind: e.kind,
        cluster: e.cluster.as_str(),
    }));
    write_atomic(&dir.join(EVENTS_FILE), &events)?;
    write_triplets(&dir.join(TRIPLETS_FILE), &graph.triplets())?;
    let clusters = to_jsonl(graph.clusters_sorted().into_iter().map(|c| ClusterRecord {
        id: c.id.as_str(),
        base: c.base.as_str(),
        members: c.members.iter().map(EventId::as_str).collect(),
    }));
    write_atomic(&dir.join(CLUSTERS_FILE), &clusters)?;
    Ok(())
}

pub fn write_triplets(path: &Path, triplets: &[Triplet]) -> Result<(), IoError> {
    let bytes = to_jsonl(triplets.iter().map(|t| TripletRecord {
        head: t.head.as_str(),
        rel: t.relation,
        tail: t.tail.as_str(),
        src: t.provenance,
        conf: t.confidence,
    }));
    write_atomic(path, &bytes)
}

pub fn load_graph(dir: &Path) -> Result<Graph, GraphError> {
    let mut graph = Graph::new();

    let path = dir.join(EVENTS_FILE);
    for_each_record::<GraphError, _>(&path, |line, obj| {
        let id = string_field(obj, "id", &path, line)?;
        let text = string_field(obj, "text", &path, line)?;
        let kind = match string_field(obj, "kind", &path, line)?.as_str() {
            "base" => EventKind::Base,
            "tail" => EventKind::AnnotatedTail,
            other => {
                return Err(FormatError::new(&path, line, "kind", format!("unknown kind `{other}`")).into())
            }
        };
        let cluster = string_field(obj, "cluster", &path, line)?;
        graph
            .insert_event(Event {
                id: EventId(id),
                text,
                kind,
                cluster: ClusterId(cluster),
            })
            .map_err(|e| FormatError::new(&path, line, "id", e.to_string()).into())
    })?;

    let path = dir.join(CLUSTERS_FILE);
    for_each_record::<GraphError, _>(&path, |line, obj| {
        let id = ClusterId(string_field(obj, "id", &path, line)?);
        let base = EventId(string_field(obj, "base", &path, line)?);
        graph
            .add_cluster(id.clone(), &base)
            .map_err(|e| FormatError::new(&path, line, "base", e.to_string()))?;
        let members = obj
            .get("members")
            .and_then(Value::as_array)
            .ok_or_else(|| FormatError::new(&path, line, "members", "expected an array of strings"))?;
        for m in members {
            let m = m
                .as_str()
                .ok_or_else(|| FormatError::new(&path, line, "members", "expected a string"))?;
            graph
                .add_member(&id, &EventId(m.to_string()))
                .map_err(|e| FormatError::new(&path, line, "members", e.to_string()))?;
        }
        Ok(())
    })?;

    merge_triplets(&mut graph, &dir.join(TRIPLETS_FILE))?;
    Ok(graph)
}

/// Reads a triplets file without resolving ids.
pub fn read_triplets(path: &Path) -> Result<Vec<Triplet>, GraphError> {
    let mut out = Vec::new();
    for_each_record::<GraphError, _>(path, |line, obj| {
        out.push(parse_triplet(obj, path, line)?);
        Ok(())
    })?;
    Ok(out)
}

/// Reads a triplets file and inserts every record into `graph`, reporting
/// the offending line on failure. Returns how many were newly inserted.
pub fn merge_triplets(graph: &mut Graph, path: &Path) -> Result<usize, GraphError> {
    let mut added = 0;
    for_each_record::<GraphError, _>(path, |line, obj| {
        let t = parse_triplet(obj, path, line)?;
        let field = if graph.node(&t.head).is_none() { "head" } else { "tail" };
        if graph
            .add_triplet(&t.head, t.relation, &t.tail, t.provenance, t.confidence)
            .map_err(|e| FormatError::new(path, line, field, e.to_string()))?
        {
            added += 1;
        }
        Ok(())
    })?;
    Ok(added)
}

fn parse_triplet(obj: &Map<String, Value>, path: &Path, line: usize) -> Result<Triplet, GraphError> {
    let head = string_field(obj, "head", path, line)?;
    let rel = string_field(obj, "rel", path, line)?;
    let relation: Relation = rel
        .parse()
        .map_err(|e: crate::error::ParseLabelError| FormatError::new(path, line, "rel", e.to_string()))?;
    let tail = string_field(obj, "tail", path, line)?;
    let provenance = match string_field(obj, "src", path, line)?.as_str() {
        "human" => Provenance::Human,
        "pred" => Provenance::Predicted,
        other => {
            return Err(FormatError::new(path, line, "src", format!("unknown source `{other}`")).into())
        }
    };
    let confidence = match obj.get("conf") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_f64()
                .ok_or_else(|| FormatError::new(path, line, "conf", "expected a number"))?,
        ),
    };
    if head == tail {
        return Err(FormatError::new(path, line, "tail", "self-loop").into());
    }
    Ok(Triplet {
        head: EventId(head),
        relation,
        tail: EventId(tail),
        provenance,
        confidence,
    })
}

pub(crate) fn for_each_record<E, F>(path: &Path, mut f: F) -> Result<(), E>
where
    E: From<FormatError> + From<IoError>,
    F: FnMut(usize, &Map<String, Value>) -> Result<(), E>,
{
    let file = File::open(path).at(path)?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line)
            .map_err(|e| FormatError::new(path, line_no, "<json>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| FormatError::new(path, line_no, "<json>", "expected an object"))?;
        f(line_no, obj)?;
    }
    Ok(())
}

pub(crate) fn string_field(
    obj: &Map<String, Value>,
    name: &str,
    path: &Path,
    line: usize,
) -> Result<String, FormatError> {
    match obj.get(name) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(FormatError::new(path, line, name, "expected a string")),
        None => Err(FormatError::new(path, line, name, "missing")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Graph {
        let mut g = Graph::new();
        let c = ClusterId::from("c0");
        let b = g.add_event("PersonX asks PersonY to marry", EventKind::Base, &c).unwrap();
        let t1 = g.add_event("PersonY says yes", EventKind::AnnotatedTail, &c).unwrap();
        let t2 = g.add_event("PersonX smiles", EventKind::AnnotatedTail, &c).unwrap();
        g.add_cluster(c.clone(), &b).unwrap();
        g.add_member(&c, &t1).unwrap();
        g.add_member(&c, &t2).unwrap();
        g.add_triplet(&b, Relation::OAfter, &t1, Provenance::Human, None).unwrap();
        g.add_triplet(&b, Relation::XAfter, &t2, Provenance::Human, None).unwrap();
        g.add_triplet(&t1, Relation::XAfter, &t2, Provenance::Predicted, Some(1.25)).unwrap();
        g
    }

    #[test]
    fn save_then_load_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let g = tiny();
        save_graph(&g, dir.path()).unwrap();
        let loaded = load_graph(dir.path()).unwrap();
        assert_eq!(g, loaded);
        assert_eq!(loaded.event_count(), 3);
        assert_eq!(loaded.triplet_count(), 3);
    }

    #[test]
    fn dump_is_byte_stable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        save_graph(&tiny(), a.path()).unwrap();
        let reloaded = load_graph(a.path()).unwrap();
        save_graph(&reloaded, b.path()).unwrap();
        for f in [EVENTS_FILE, TRIPLETS_FILE, CLUSTERS_FILE] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let triplets = fs::read_to_string(a.path().join(TRIPLETS_FILE)).unwrap();
        assert_eq!(
            triplets.lines().next().unwrap(),
            r#"{"head":"e00000000","rel":"xAfter","tail":"e00000002","src":"human"}"#
        );
        assert!(triplets.contains(r#""src":"pred","conf":1.25}"#));
    }

    #[test]
    fn unknown_relation_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&tiny(), dir.path()).unwrap();
        let path = dir.path().join(TRIPLETS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str(r#"{"head":"e00000000","rel":"xWant","tail":"e00000001","src":"human"}"#);
        text.push('\n');
        fs::write(&path, text).unwrap();
        let err = load_graph(dir.path()).unwrap_err();
        match err {
            GraphError::Format(f) => {
                assert_eq!(f.line, 4);
                assert_eq!(f.field, "rel");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn nolink_is_not_an_edge_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(&path, "{\"head\":\"a\",\"rel\":\"NoLink\",\"tail\":\"b\",\"src\":\"human\"}\n").unwrap();
        let err = read_triplets(&path).unwrap_err();
        assert!(err.to_string().contains("`rel`"), "{err}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        save_graph(&tiny(), dir.path()).unwrap();
        let path = dir.path().join(EVENTS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        fs::write(&path, text).unwrap();
        let err = load_graph(dir.path()).unwrap_err().to_string();
        assert!(err.contains(":4:"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        fs::write(&path, "{\"head\":\"a\",\"rel\":\"xNeed\",\"src\":\"human\"}\n").unwrap();
        let err = read_triplets(&path).unwrap_err().to_string();
        assert!(err.contains("`tail`: missing"), "{err}");
    }
}
