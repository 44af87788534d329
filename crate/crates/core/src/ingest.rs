//! Raw annotation ingest.
//!
//! Two layouts are accepted:
//!
//! * the wide CSV layout, one row per base event, with a header naming
//!   `event`, the nine relation columns (each cell a JSON list of
//!   annotations) and optionally `prefix` and `split`;
//! * a long TSV layout, one annotation per line:
//!   `base_event<TAB>relation<TAB>annotation[<TAB>split]`.
//!
//! Every base event opens a cluster; its surviving, normalized annotations
//! become the cluster's members and human `base -> tail` triplets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use crate::error::{FormatError, GraphError, IoContext};
use crate::graph::{ClusterId, EventKind, Graph, Provenance};
use crate::normalizer::{normalize_tail, RawAnnotation};
use crate::relation::OriginalRelation;

/// One base event with its annotations, as read from a raw file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub line: usize,
    pub event: String,
    pub annotations: Vec<(OriginalRelation, String)>,
    pub split: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    pub annotations: usize,
    pub dropped: usize,
    /// Base events plus surviving tails, counted before deduplication.
    pub events_before_dedup: usize,
    pub events: usize,
    pub triplets: usize,
    pub clusters: usize,
    /// Cluster ids per split name (`train`, `dev`, `test`, ...).
    pub splits: BTreeMap<String, Vec<String>>,
    /// Counts of surviving annotations per original relation, taken from the
    /// training split when the input carries split labels.
    pub relation_distribution: BTreeMap<String, u64>,
}

/// Maps the raw split labels onto stable names.
pub fn split_name(raw: &str) -> String {
    match raw.trim() {
        "trn" | "train" => "train".into(),
        "dev" | "valid" | "validation" => "dev".into(),
        "tst" | "test" => "test".into(),
        other => other.to_string(),
    }
}

pub fn read_raw(path: &Path) -> Result<Vec<RawRow>, GraphError> {
    let file = File::open(path).at(path)?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).at(path)?;
    let header = first.trim_end();
    let is_csv = header.split(',').any(|c| c.trim().trim_matches('"') == "event")
        && header.contains(',');
    if is_csv {
        read_csv(path)
    } else {
        read_tsv(path)
    }
}

fn read_csv(path: &Path) -> Result<Vec<RawRow>, GraphError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_path(path)
        .map_err(|e| FormatError::new(path, 1, "<csv>", e.to_string()))?;
    let headers = rdr
        .headers()
        .map_err(|e| FormatError::new(path, 1, "<csv>", e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let event_col = col("event").ok_or_else(|| FormatError::new(path, 1, "event", "missing column"))?;
    let split_col = col("split");
    let rel_cols: Vec<(OriginalRelation, usize)> = OriginalRelation::ALL
        .into_iter()
        .filter_map(|r| col(r.as_str()).map(|c| (r, c)))
        .collect();

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| FormatError::new(path, line, "<csv>", e.to_string()))?;
        let mut annotations = Vec::new();
        for &(rel, c) in &rel_cols {
            let cell = record.get(c).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let items: Vec<String> = serde_json::from_str(cell).map_err(|e| {
                FormatError::new(path, line, rel.as_str(), format!("expected a JSON list of strings: {e}"))
            })?;
            annotations.extend(items.into_iter().map(|t| (rel, t)));
        }
        rows.push(RawRow {
            line,
            event: record.get(event_col).unwrap_or("").to_string(),
            annotations,
            split: split_col.and_then(|c| record.get(c)).map(split_name),
        });
    }
    Ok(rows)
}

fn read_tsv(path: &Path) -> Result<Vec<RawRow>, GraphError> {
    let file = File::open(path).at(path)?;
    let mut rows: Vec<RawRow> = Vec::new();
    let mut by_event: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(FormatError::new(path, line_no, "<tsv>", "expected event, relation, annotation").into());
        }
        let rel: OriginalRelation = match cols[1].trim().parse() {
            Ok(r) => r,
            Err(_) if line_no == 1 => continue, // header
            Err(e) => return Err(FormatError::new(path, line_no, "relation", e.to_string()).into()),
        };
        let event = cols[0].to_string();
        let ix = *by_event.entry(event.clone()).or_insert_with(|| {
            rows.push(RawRow {
                line: line_no,
                event,
                annotations: Vec::new(),
                split: cols.get(3).map(|s| split_name(s)),
            });
            rows.len() - 1
        });
        rows[ix].annotations.push((rel, cols[2].to_string()));
    }
    Ok(rows)
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes raw rows into `graph`. Running it twice over the same rows
/// leaves the graph unchanged the second time.
pub fn ingest_rows(graph: &mut Graph, rows: &[RawRow]) -> Result<IngestReport, GraphError> {
    let mut report = IngestReport::default();
    let mut cluster_of_base: HashMap<String, ClusterId> = graph
        .clusters()
        .iter()
        .filter_map(|c| graph.event(&c.base).map(|e| (e.text.clone(), c.id.clone())))
        .collect();
    let mut splits: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let has_splits = rows.iter().any(|r| r.split.is_some());
    let mut distribution: BTreeMap<OriginalRelation, u64> = BTreeMap::new();

    for row in rows {
        report.rows += 1;
        let base_text = collapse(&row.event);
        if base_text.is_empty() {
            log::warn!("line {}: empty base event skipped", row.line);
            continue;
        }
        let cluster = match cluster_of_base.get(&base_text) {
            Some(c) => c.clone(),
            None => {
                let id = ClusterId(format!("c{:06}", graph.cluster_count()));
                let base = graph.add_event(&base_text, EventKind::Base, &id)?;
                graph.add_cluster(id.clone(), &base)?;
                cluster_of_base.insert(base_text.clone(), id.clone());
                id
            }
        };
        let base = graph.add_event(&base_text, EventKind::Base, &cluster)?;
        report.events_before_dedup += 1;
        if let Some(s) = &row.split {
            splits.entry(s.clone()).or_default().insert(cluster.0.clone());
        }
        let counts_for_distribution = !has_splits || row.split.as_deref() == Some("train");

        for (rel, text) in &row.annotations {
            report.annotations += 1;
            let Some(norm) = normalize_tail(&RawAnnotation::new(text.as_str(), *rel)) else {
                report.dropped += 1;
                continue;
            };
            report.events_before_dedup += 1;
            let tail = graph.add_event(&norm.text, EventKind::AnnotatedTail, &cluster)?;
            if tail == base {
                continue;
            }
            graph.add_member(&cluster, &tail)?;
            graph.add_triplet(&base, norm.grouped_relation, &tail, Provenance::Human, None)?;
            if counts_for_distribution {
                *distribution.entry(*rel).or_default() += 1;
            }
        }
    }
    if report.annotations > 0 && report.dropped == report.annotations {
        log::warn!("every annotation was filtered out; the graph has no tail events");
    }
    report.events = graph.event_count();
    report.triplets = graph.triplet_count();
    report.clusters = graph.cluster_count();
    report.splits = splits
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect();
    report.relation_distribution = OriginalRelation::ALL
        .into_iter()
        .map(|r| (r.as_str().to_string(), distribution.get(&r).copied().unwrap_or(0)))
        .collect();
    Ok(report)
}

pub fn ingest_file(path: &Path) -> Result<(Graph, IngestReport), GraphError> {
    let rows = read_raw(path)?;
    let mut graph = Graph::new();
    let report = ingest_rows(&mut graph, &rows)?;
    Ok((graph, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Relation;
    use std::io::Write;

    const CSV: &str = "event,oEffect,oReact,oWant,xAttr,xEffect,xIntent,xNeed,xReact,xWant,prefix,split\n\
\"PersonX asks PersonY to marry\",\"[\"\"says yes\"\"]\",\"[\"\"happy\"\"]\",[],\"[\"\"none\"\"]\",\"[\"\"smiles\"\"]\",\"[\"\"to be loved\"\"]\",\"[\"\"to buy a ring\"\"]\",\"[\"\"nervous\"\"]\",\"[\"\"to kiss PersonY\"\"]\",\"[]\",trn\n";

    fn write(contents: &str, name: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(name);
        File::create(&path).unwrap().write_all(contents.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn wide_csv() {
        let (_d, path) = write(CSV, "raw.csv");
        let (g, report) = ingest_file(&path).unwrap();
        assert_eq!(report.rows, 1);
        assert_eq!(report.annotations, 8);
        assert_eq!(report.dropped, 1);
        assert_eq!(g.event_count(), 8);
        assert_eq!(g.triplet_count(), 7);
        assert_eq!(report.splits["train"], vec!["c000000".to_string()]);
        let texts: BTreeSet<&str> = g.events().iter().map(|e| e.text.as_str()).collect();
        for t in [
            "PersonY says yes",
            "PersonY is happy",
            "PersonX smiles",
            "PersonX is loved",
            "PersonX buys a ring",
            "PersonX is nervous",
            "PersonX kisses PersonY",
        ] {
            assert!(texts.contains(t), "missing {t}: {texts:?}");
        }
        let base = g.node_by_text("PersonX asks PersonY to marry").unwrap();
        let kisses = g.node_by_text("PersonX kisses PersonY").unwrap();
        assert!(g.contains(base, Relation::XAfter, kisses));
        assert_eq!(report.relation_distribution["xAttr"], 0);
        assert_eq!(report.relation_distribution["xWant"], 1);
    }

    #[test]
    fn long_tsv_and_idempotent_reingest() {
        let tsv = "PersonX goes home\txEffect\tgets tired\ttrn\n\
                   PersonX goes home\txWant\tto sleep\ttrn\n\
                   PersonX eats lunch\toReact\tnone\tdev\n";
        let (_d, path) = write(tsv, "raw.tsv");
        let rows = read_raw(&path).unwrap();
        assert_eq!(rows.len(), 2);
        let mut once = Graph::new();
        ingest_rows(&mut once, &rows).unwrap();
        let mut twice = Graph::new();
        ingest_rows(&mut twice, &rows).unwrap();
        ingest_rows(&mut twice, &rows).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.cluster_count(), 2);
    }

    #[test]
    fn only_none_annotations() {
        let tsv = "PersonX waits\txAttr\tnone\n";
        let (_d, path) = write(tsv, "raw.tsv");
        let (g, report) = ingest_file(&path).unwrap();
        assert_eq!(report.dropped, 1);
        assert_eq!(g.event_count(), 1);
        assert_eq!(g.triplet_count(), 0);
    }

    #[test]
    fn bad_relation_cell() {
        let bad = CSV.replace("\"[\"\"smiles\"\"]\"", "smiles");
        let (_d, path) = write(&bad, "raw.csv");
        let err = read_raw(&path).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("xEffect"), "{err}");
    }
}
