//! One function per acceptance criterion. Each returns a short summary on
//! success and a description of the first problems found on failure, so the
//! same checks back both the integration tests and the acceptance report.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use densekg_core::completion::{complete, tune_from_scores, CompletionPlan, Mode, Objective, Thresholds};
use densekg_core::dataset::{build_training_set, write_training_set, SamplingConfig, Source};
use densekg_core::eval::{degroup_relations, evaluate_precision, AnnotatedSubgraph, GoldPair, Scope};
use densekg_core::graph::{ClusterId, EventId, EventKind, Graph, Provenance, Triplet};
use densekg_core::ingest::{ingest_rows, RawRow};
use densekg_core::normalizer::{normalize_tail, RawAnnotation};
use densekg_core::paths::{count_k_hop, sample_paths, SampleRule};
use densekg_core::relation::{Label, OriginalRelation, Relation, K};
use densekg_core::scorer::{
    BuiltinConfig, BuiltinScorer, EncodedExample, FnScorer, RelationScorer, ScoreVector, ScorerParams, Vocab,
};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::random_annotation;
use crate::graphs::{cluster_graph, random_digraph};
use crate::oracles::{brute_complete, brute_k_hop, hash_scorer};
use crate::synthetic::templated_examples;

pub type Outcome = Result<String, String>;

/// Path of a file under the workspace `fixtures/` directory.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn fail_with<T>(problems: Vec<String>) -> Result<T, String> {
    const SHOWN: usize = 10;
    let n = problems.len();
    let mut msg = problems.into_iter().take(SHOWN).collect::<Vec<_>>().join("; ");
    if n > SHOWN {
        msg.push_str(&format!("; and {} more", n - SHOWN));
    }
    Err(msg)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Cases of the golden normalization corpus as
/// `(raw, relation, expected output)`.
pub fn golden_cases() -> Result<Vec<(String, OriginalRelation, Option<(String, Relation)>)>, String> {
    let path = fixture("normalization_golden.tsv");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(format!("line {}: expected 4 columns", i + 1));
        }
        let rel = cols[1].parse::<OriginalRelation>().map_err(|e| format!("line {}: {e}", i + 1))?;
        let want = if cols[2].is_empty() {
            None
        } else {
            let g = cols[3].parse::<Relation>().map_err(|e| format!("line {}: {e}", i + 1))?;
            Some((cols[2].to_string(), g))
        };
        out.push((cols[0].to_string(), rel, want));
    }
    Ok(out)
}

pub fn normalization_golden() -> Outcome {
    let cases = golden_cases()?;
    let start = Instant::now();
    let mut wrong = Vec::new();
    for (raw, rel, want) in &cases {
        let got = normalize_tail(&RawAnnotation::new(raw.as_str(), *rel)).map(|n| (n.text, n.grouped_relation));
        if &got != want {
            wrong.push(format!("{raw:?}/{rel}: expected {want:?}, got {got:?}"));
        }
    }
    let elapsed = start.elapsed();
    ensure(cases.len() >= 30, || format!("only {} cases", cases.len()))?;
    if !wrong.is_empty() {
        return fail_with(wrong);
    }
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("{} cases, 100% exact match in {:.1} ms", cases.len(), elapsed.as_secs_f64() * 1e3))
}

/// Problems with the normalized form of `raw`, if it has one.
pub fn normalization_violations(raw: &RawAnnotation) -> Vec<String> {
    let Some(out) = normalize_tail(raw) else {
        return Vec::new();
    };
    let text = &out.text;
    let mut v = Vec::new();
    let tokens: Vec<&str> = text.split(' ').collect();
    if !matches!(tokens[0], "PersonX" | "PersonY") || tokens.len() < 2 {
        v.push(format!("{text:?} does not start with a subject"));
    }
    if tokens.get(1) == Some(&"to") {
        v.push(format!("{text:?} keeps a leading infinitive"));
    }
    if out.grouped_relation.is_persona() && tokens.get(1) != Some(&"is") {
        v.push(format!("persona tail {text:?} lacks the copula"));
    }
    if tokens.iter().any(|t| t.is_empty()) {
        v.push(format!("{text:?} has stray whitespace"));
    }
    if tokens.iter().any(|t| t.contains('_')) {
        v.push(format!("{text:?} contains a placeholder"));
    }
    let again = normalize_tail(&RawAnnotation::new(text.as_str(), out.grouped_relation.representative()));
    if again.as_ref() != Some(&out) {
        v.push(format!("{text:?} renormalizes to {again:?}"));
    }
    v
}

pub fn normalization_invariants(seed: u64, n: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    let mut kept = 0;
    for _ in 0..n {
        let (text, rel) = random_annotation(&mut rng);
        let raw = RawAnnotation::new(text.as_str(), rel);
        kept += usize::from(normalize_tail(&raw).is_some());
        bad.extend(normalization_violations(&raw).into_iter().map(|v| format!("{text:?}/{rel}: {v}")));
    }
    if !bad.is_empty() {
        return fail_with(bad);
    }
    Ok(format!("{n} cases ({kept} kept), 0 violations"))
}

/// 25 clusters with four annotated tails each: 100 human positives, with
/// relations cycling through all six so a third are persona edges.
pub fn dataset_fixture() -> (Graph, Vec<ClusterId>) {
    let mut g = Graph::new();
    let mut split = Vec::new();
    for c in 0..25 {
        let cid = ClusterId(format!("c{c:06}"));
        let base = g.add_event(&format!("PersonX plans event {c}"), EventKind::Base, &cid).unwrap();
        g.add_cluster(cid.clone(), &base).unwrap();
        for j in 0..4 {
            let i = c * 4 + j;
            let r = Relation::ALL[i % K];
            let text = if r.is_persona() {
                format!("{} is glad {i}", if r == Relation::OPersona { "PersonY" } else { "PersonX" })
            } else {
                format!("PersonX walks home {i}")
            };
            let t = g.add_event(&text, EventKind::AnnotatedTail, &cid).unwrap();
            g.add_member(&cid, &t).unwrap();
            g.add_triplet(&base, r, &t, Provenance::Human, None).unwrap();
        }
        split.push(cid);
    }
    (g, split)
}

pub fn dataset_builder() -> Outcome {
    let (graph, split) = dataset_fixture();
    let config = SamplingConfig {
        random_ratio: 4.081,
        persona_ratio: 1.632,
        seed: 11,
    };
    let examples = build_training_set(&graph, &split, &config).map_err(|e| e.to_string())?;
    let count = |s: Source| examples.iter().filter(|e| e.source == s).count();
    let (pos, random, persona) = (count(Source::Positive), count(Source::RandomNeg), count(Source::PersonaNeg));
    ensure((pos, random, persona) == (100, 408, 163), || {
        format!("expected 100/408/163 positives/random/persona, got {pos}/{random}/{persona}")
    })?;

    let human: HashSet<(&str, &str)> = graph
        .triplets()
        .iter()
        .filter(|t| t.provenance == Provenance::Human)
        .map(|t| {
            let h = graph.event(&t.head).unwrap().text.as_str();
            let tl = graph.event(&t.tail).unwrap().text.as_str();
            (h, tl)
        })
        .collect();
    let mut problems = Vec::new();
    let mut negative_pairs = HashSet::new();
    for e in examples.iter().filter(|e| e.source != Source::Positive) {
        if e.label != Label::NoLink {
            problems.push(format!("negative {:?} -> {:?} is labeled {}", e.head, e.tail, e.label));
        }
        if human.contains(&(e.head.as_str(), e.tail.as_str())) {
            problems.push(format!("negative {:?} -> {:?} is a human pair", e.head, e.tail));
        }
        if e.head == e.tail {
            problems.push(format!("negative {:?} is a self pair", e.head));
        }
        if !negative_pairs.insert((e.head.clone(), e.tail.clone())) {
            problems.push(format!("negative {:?} -> {:?} emitted twice", e.head, e.tail));
        }
        if e.source == Source::PersonaNeg && !e.tail.split_whitespace().any(|w| w == "is") {
            problems.push(format!("persona negative tail {:?} lacks \"is\"", e.tail));
        }
    }
    if !problems.is_empty() {
        return fail_with(problems);
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let again = build_training_set(&graph, &split, &config).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("run{run}.jsonl"));
        write_training_set(&path, &again).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "two runs with the same seed differ".into())?;
    Ok("408 random + 163 persona negatives, all persona tails contain \"is\", 0 collisions, byte-identical reruns".into())
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Reference forward pass written directly from the model definition:
/// gate from the mean of all token embeddings, relation distribution from
/// the max-pooled head and tail embeddings.
pub fn reference_score(p: &ScorerParams, head: &[u32], tail: &[u32]) -> (f64, [f64; K]) {
    let d = p.dim;
    let row = |id: u32| &p.emb[id as usize * d..(id as usize + 1) * d];
    let all: Vec<u32> = head.iter().chain(tail).copied().collect();
    let mean: Vec<f64> = (0..d)
        .map(|j| all.iter().map(|&id| row(id)[j]).sum::<f64>() / all.len() as f64)
        .collect();
    let gate = sigmoid((0..d).map(|j| p.w_t[j] * mean[j]).sum());
    let maxpool = |ids: &[u32]| -> Vec<f64> {
        (0..d)
            .map(|j| ids.iter().map(|&id| row(id)[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    };
    let x: Vec<f64> = maxpool(head).into_iter().chain(maxpool(tail)).collect();
    let logits: Vec<f64> = (0..K)
        .map(|k| (0..2 * d).map(|j| p.w_c[k * 2 * d + j] * x[j]).sum())
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
    let mut probs = [0.0; K];
    for k in 0..K {
        probs[k] = (logits[k] - m).exp() / z;
    }
    (gate, probs)
}

fn first_max(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn small_vocab(n: usize) -> Vocab {
    let mut tokens: Vec<String> = (0..n).map(|i| format!("w{i:02}")).collect();
    tokens.insert(0, densekg_core::scorer::UNK.to_string());
    Vocab::from_tokens(tokens).unwrap()
}

fn random_text(rng: &mut impl Rng, vocab: usize) -> String {
    let len = rng.random_range(1..=8);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.1) {
                "unseen".to_string()
            } else {
                format!("w{:02}", rng.random_range(0..vocab))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `draws` random (weights, input) pairs: the score vector is well formed
/// and agrees with [`reference_score`].
pub fn scorer_invariants(seed: u64, draws: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_model = 100;
    let mut problems = Vec::new();
    let mut done = 0;
    while done < draws {
        let dim = rng.random_range(1..=16);
        let range = [0.05, 1.0, 10.0][rng.random_range(0..3)];
        let params = ScorerParams::uniform(small_vocab(20), dim, range, &mut rng);
        let model = BuiltinScorer::new(params, 100);
        for _ in 0..per_model.min(draws - done) {
            done += 1;
            let (h, t) = (random_text(&mut rng, 20), random_text(&mut rng, 20));
            let s = model.score(&h, &t).map_err(|e| e.to_string())?;
            let (gate, probs) = (s.gate(), *s.probs());
            let sum: f64 = probs.iter().sum();
            if !(0.0..=1.0).contains(&gate) {
                problems.push(format!("gate {gate}"));
            }
            if (sum - 1.0).abs() > 1e-6 {
                problems.push(format!("probs sum to {sum}"));
            }
            let combined = s.combined();
            if (0..K).any(|k| combined[k] != gate + probs[k]) {
                problems.push(format!("combined {combined:?} != gate + probs"));
            }
            if first_max(&combined) != first_max(&probs) || s.argmax().index() != first_max(&probs) {
                problems.push(format!("argmax disagreement on {combined:?}"));
            }
            let vocab = model.params().vocab.clone();
            let (rg, rp) = reference_score(model.params(), &vocab.ids(&h), &vocab.ids(&t));
            if (rg - gate).abs() > 1e-9 || (0..K).any(|k| (rp[k] - probs[k]).abs() > 1e-9) {
                problems.push(format!("({h:?}, {t:?}): got ({gate}, {probs:?}), reference ({rg}, {rp:?})"));
            }
        }
        if problems.len() > 10 {
            break;
        }
    }
    if problems.is_empty() {
        Ok(done)
    } else {
        fail_with(problems)
    }
}

/// Largest relative error between analytic and central-difference
/// gradients over every parameter, on `batches` random 10-example batches.
pub fn gradient_check(seed: u64, batches: usize) -> Result<f64, String> {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..batches {
        let vocab = small_vocab(12);
        let mut params = ScorerParams::uniform(vocab.clone(), 4, 0.5, &mut rng);
        let batch: Vec<EncodedExample> = (0..10)
            .map(|_| {
                let linked = rng.random_bool(0.6);
                EncodedExample {
                    head: vocab.ids(&random_text(&mut rng, 12)),
                    tail: vocab.ids(&random_text(&mut rng, 12)),
                    linked,
                    relation: linked.then(|| Relation::ALL[rng.random_range(0..K)]),
                    truncated: false,
                }
            })
            .collect();
        let (_, grads) = params.loss_and_grad(&batch);
        let groups: [(&str, fn(&mut ScorerParams) -> &mut Vec<f64>, &Vec<f64>); 3] = [
            ("emb", |p| &mut p.emb, &grads.emb),
            ("w_t", |p| &mut p.w_t, &grads.w_t),
            ("w_c", |p| &mut p.w_c, &grads.w_c),
        ];
        for (name, field, analytic) in groups {
            for i in 0..analytic.len() {
                let orig = field(&mut params)[i];
                field(&mut params)[i] = orig + H;
                let up = params.loss(&batch);
                field(&mut params)[i] = orig - H;
                let down = params.loss(&batch);
                field(&mut params)[i] = orig;
                let numeric = (up - down) / (2.0 * H);
                let a = analytic[i];
                let scale = a.abs().max(numeric.abs());
                // both effectively zero: nothing to compare
                if scale < 1e-7 {
                    continue;
                }
                let rel = (a - numeric).abs() / scale;
                if rel > 1e-4 {
                    return Err(format!("{name}[{i}]: analytic {a:e}, numeric {numeric:e}, relative error {rel:e}"));
                }
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

pub fn scorer_math() -> Outcome {
    let draws = scorer_invariants(5, 10_000)?;
    let worst = gradient_check(6, 20)?;
    Ok(format!(
        "{draws} draws satisfy the score invariants; worst gradient relative error {worst:.1e} on 20 batches"
    ))
}

/// Precision, accepted count and linked count of `scores` against `gold`
/// under `thresholds`.
pub fn thresholded_precision(scores: &[ScoreVector], gold: &[Label], thresholds: &Thresholds) -> (f64, usize, usize) {
    let mut accepted = 0;
    let mut correct = 0;
    for (s, g) in scores.iter().zip(gold) {
        if let Some((r, _)) = densekg_core::scorer::decide(s, thresholds) {
            accepted += 1;
            correct += usize::from(*g == Label::Linked(r));
        }
    }
    let linked = gold.iter().filter(|g| **g != Label::NoLink).count();
    let p = if accepted == 0 { 0.0 } else { correct as f64 / accepted as f64 };
    (p, accepted, linked)
}

pub fn scorer_learning() -> Outcome {
    let examples = templated_examples(3000, 21);
    let (train, rest) = examples.split_at(2100);
    let (dev, test) = rest.split_at(450);
    let start = Instant::now();
    let config = BuiltinConfig {
        seed: 21,
        ..BuiltinConfig::default()
    };
    let (model, _) = BuiltinScorer::train(train, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let score = |set: &[densekg_core::dataset::TrainingExample]| {
        let pairs: Vec<(&str, &str)> = set.iter().map(|e| (e.head.as_str(), e.tail.as_str())).collect();
        model.score_batch(&pairs).map_err(|e| e.to_string())
    };
    let dev_gold: Vec<Label> = dev.iter().map(|e| e.label).collect();
    let tuned = tune_from_scores(&score(dev)?, &dev_gold, Objective::Precision);
    let test_gold: Vec<Label> = test.iter().map(|e| e.label).collect();
    let (precision, accepted, linked) = thresholded_precision(&score(test)?, &test_gold, &tuned.thresholds);
    ensure(precision >= 0.95, || format!("held-out precision {precision:.4} < 0.95"))?;
    ensure(accepted * 2 >= linked, || format!("only {accepted} of {linked} linked pairs accepted"))?;
    ensure(elapsed < Duration::from_secs(120), || format!("training took {elapsed:?}"))?;
    Ok(format!(
        "held-out precision {precision:.4} over {accepted} accepted of {linked} linked; trained in {:.1} s",
        elapsed.as_secs_f64()
    ))
}

fn triplet_set(ts: &[Triplet]) -> BTreeSet<(String, Relation, String, u64)> {
    ts.iter()
        .map(|t| (t.head.0.clone(), t.relation, t.tail.0.clone(), t.confidence.unwrap_or(f64::NAN).to_bits()))
        .collect()
}

fn random_thresholds(rng: &mut impl Rng) -> Thresholds {
    let mut v = [0.0; K];
    for x in &mut v {
        *x = rng.random_range(0.2..1.6);
    }
    Thresholds::new(v).unwrap()
}

pub fn completion_oracle(seed: u64, trials: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problems = Vec::new();
    let mut predicted = 0;
    for trial in 0..trials {
        let clusters = rng.random_range(2..=8);
        let events = rng.random_range(clusters..=50);
        let extra = rng.random_range(0..=events);
        let graph = cluster_graph(&mut rng, events, clusters, extra);
        let f = hash_scorer(trial as u64);
        let scorer = FnScorer::new("hash", f.clone());
        let low = random_thresholds(&mut rng);
        let mut high = low.clone();
        for r in Relation::ALL {
            high.set(r, low.get(r) + rng.random_range(0.0..0.5));
        }
        for mode in [Mode::Intra, Mode::Inter, Mode::Both] {
            let plan = CompletionPlan {
                mode,
                cluster_sample_size: clusters,
                seed: rng.random(),
                batch_size: rng.random_range(1..=64),
            };
            let run = |t: &Thresholds| complete(&graph, &scorer, t, &plan).map(|v| triplet_set(&v));
            let got = run(&low).map_err(|e| format!("trial {trial}: {e}"))?;
            let want = brute_complete(&graph, &f, &low, mode);
            if got != want {
                problems.push(format!(
                    "trial {trial} {mode:?}: {} predicted, reference {} ({} missing, {} extra)",
                    got.len(),
                    want.len(),
                    want.difference(&got).count(),
                    got.difference(&want).count()
                ));
            }
            let raised = run(&high).map_err(|e| format!("trial {trial}: {e}"))?;
            if !raised.is_subset(&got) {
                problems.push(format!("trial {trial} {mode:?}: raising thresholds added links"));
            }
            predicted += got.len();
        }
    }
    if !problems.is_empty() {
        return fail_with(problems);
    }
    Ok(format!(
        "{trials} trials x 3 modes match the all-pairs reference ({predicted} links); raised thresholds always give subsets"
    ))
}

pub fn chain_fixture() -> Graph {
    let mut g = Graph::new();
    let c = ClusterId::from("c0");
    let ids: Vec<EventId> = ["a", "b", "c", "d"]
        .iter()
        .map(|t| g.add_event(t, EventKind::AnnotatedTail, &c).unwrap())
        .collect();
    for w in ids.windows(2) {
        g.add_triplet(&w[0], Relation::XAfter, &w[1], Provenance::Human, None).unwrap();
    }
    g
}

pub fn path_oracle(seed: u64, graphs: usize) -> Outcome {
    let chain = [1, 2, 3].map(|k| count_k_hop(&chain_fixture(), k));
    ensure(chain == [3, 2, 1], || format!("chain a->b->c->d gives {chain:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut problems = Vec::new();
    let mut largest = 0;
    for i in 0..graphs {
        let nodes = rng.random_range(1..=200);
        let edges = rng.random_range(0..=nodes * 3);
        let g = random_digraph(&mut rng, nodes, edges);
        largest = largest.max(nodes);
        for k in 1..=3 {
            let (got, want) = (count_k_hop(&g, k), brute_k_hop(&g, k));
            if got != want {
                problems.push(format!("graph {i} ({nodes} nodes, k={k}): {got} vs reference {want}"));
            }
        }
    }
    if !problems.is_empty() {
        return fail_with(problems);
    }
    Ok(format!("chain gives 3/2/1; {graphs} random graphs (up to {largest} nodes) match for k = 1, 2, 3"))
}

pub fn heuristic_sampling(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_digraph(&mut rng, 80, 1500);
    let triplets = g.triplets();
    let edges: HashSet<(&EventId, Relation, &EventId)> =
        triplets.iter().map(|t| (&t.head, t.relation, &t.tail)).collect();
    let linked: HashSet<(&EventId, &EventId)> = triplets.iter().map(|t| (&t.head, &t.tail)).collect();
    let mut problems = Vec::new();
    let mut total = 0;
    for k in [2, 3] {
        let sample = sample_paths(&g, k, 1000, SampleRule::Heuristic, &mut rng);
        if let Some(n) = sample.notice {
            problems.push(n);
        }
        total += sample.paths.len();
        for p in &sample.paths {
            let distinct: HashSet<_> = p.nodes.iter().collect();
            if p.nodes.len() != k + 1 || p.relations.len() != k || distinct.len() != k + 1 {
                problems.push(format!("{:?} is not a simple {k}-hop path", p.nodes));
            }
            if (0..k).any(|i| !edges.contains(&(&p.nodes[i], p.relations[i], &p.nodes[i + 1]))) {
                problems.push(format!("{:?} uses a missing edge", p.nodes));
            }
            if !linked.contains(&(&p.nodes[0], &p.nodes[k])) {
                problems.push(format!("{:?}: endpoints are not linked", p.nodes));
            }
        }
    }
    if !problems.is_empty() {
        return fail_with(problems);
    }
    Ok(format!("{total} sampled 2- and 3-hop paths, all simple with linked endpoints"))
}

/// Five events in two clusters and the hand-labeled pairs used by
/// [`precision_evaluator`].
pub fn precision_fixture() -> (Graph, Vec<Triplet>, AnnotatedSubgraph) {
    let mut g = Graph::new();
    let (c1, c2) = (ClusterId::from("c1"), ClusterId::from("c2"));
    let mut add = |text: &str, kind, c: &ClusterId| g.add_event(text, kind, c).unwrap();
    let a = add("PersonX bakes bread", EventKind::Base, &c1);
    let b = add("PersonX is hungry", EventKind::AnnotatedTail, &c1);
    let c = add("PersonX buys flour", EventKind::AnnotatedTail, &c1);
    let d = add("PersonX runs a race", EventKind::Base, &c2);
    let e = add("PersonX is tired", EventKind::AnnotatedTail, &c2);
    g.add_cluster(c1.clone(), &a).unwrap();
    g.add_cluster(c2.clone(), &d).unwrap();
    for (cl, m) in [(&c1, &b), (&c1, &c), (&c2, &e)] {
        g.add_member(cl, m).unwrap();
    }
    let pred = |h: &EventId, r, t: &EventId| Triplet {
        head: h.clone(),
        relation: r,
        tail: t.clone(),
        provenance: Provenance::Predicted,
        confidence: Some(1.5),
    };
    let predicted = vec![
        pred(&c, Relation::XNeed, &a),     // intra, correct
        pred(&b, Relation::XPersona, &c),  // intra, correct
        pred(&e, Relation::XPersona, &b),  // inter, correct
        pred(&d, Relation::XAfter, &c),    // inter, gold NoLink
        pred(&a, Relation::XIntent, &e),   // not annotated
    ];
    let gp = |h: &str, t: &str, gold, scope| GoldPair {
        head: h.into(),
        tail: t.into(),
        gold,
        scope,
    };
    let gold = AnnotatedSubgraph::new(vec![
        gp("PersonX buys flour", "PersonX bakes bread", Label::Linked(Relation::XNeed), Scope::Intra),
        gp("PersonX is hungry", "PersonX buys flour", Label::Linked(Relation::XPersona), Scope::Intra),
        gp("PersonX is tired", "PersonX is hungry", Label::Linked(Relation::XPersona), Scope::Inter),
        gp("PersonX runs a race", "PersonX buys flour", Label::NoLink, Scope::Inter),
        gp("PersonX bakes bread", "PersonX is hungry", Label::Linked(Relation::XAfter), Scope::Intra),
    ])
    .unwrap();
    (g, predicted, gold)
}

/// Every gold label crossed with both scopes.
pub fn full_schema_subgraph() -> AnnotatedSubgraph {
    let labels = Relation::ALL.map(Label::Linked).into_iter().chain([Label::NoLink]);
    let mut pairs = Vec::new();
    for (i, gold) in labels.enumerate() {
        for scope in [Scope::Intra, Scope::Inter] {
            pairs.push(GoldPair {
                head: format!("PersonX does step {i}"),
                tail: format!("PersonY sees step {i} {}", scope.as_str()),
                gold,
                scope,
            });
        }
    }
    AnnotatedSubgraph::new(pairs).unwrap()
}

pub fn precision_evaluator() -> Outcome {
    let (graph, predicted, gold) = precision_fixture();
    gold.check_scopes(&graph).map_err(|e| e.to_string())?;
    let r = evaluate_precision(&graph, &predicted, &gold);
    let got = (r.total, r.intra, r.inter, r.uncovered);
    ensure(got == (Some(0.75), Some(1.0), Some(0.5), 1), || {
        format!("total/intra/inter/uncovered = {got:?}, expected 0.75/1.0/0.5/1")
    })?;
    let c = r.counts["total"];
    ensure((c.predicted, c.correct) == (4, 3), || format!("counts {c:?}"))?;

    let schema = full_schema_subgraph();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("gold.tsv");
    schema.write_tsv(&path).map_err(|e| e.to_string())?;
    let back = AnnotatedSubgraph::read_tsv(&path).map_err(|e| e.to_string())?;
    ensure(back == schema, || "annotated subgraph changed in the TSV round trip".into())?;
    ensure(back.label_counts().len() == 14, || "not every label/scope cell survived".into())?;
    Ok("4 predictions, 3 correct: 0.75 total, 1.0 intra, 0.5 inter; 7 labels x 2 scopes round-trip".into())
}

/// A graph ingested from random annotations, and the original-relation
/// counts of its rows.
pub fn ingested_random_graph(seed: u64, rows: usize) -> (Graph, BTreeMap<OriginalRelation, u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<RawRow> = (0..rows)
        .map(|i| RawRow {
            line: i + 2,
            event: format!("PersonX starts task {i}"),
            annotations: (0..rng.random_range(1..=9))
                .map(|_| {
                    let (text, r) = random_annotation(&mut rng);
                    (r, text)
                })
                .collect(),
            split: None,
        })
        .collect();
    let mut g = Graph::new();
    let report = ingest_rows(&mut g, &raw).unwrap();
    let dist = report
        .relation_distribution
        .iter()
        .map(|(k, v)| (k.parse().unwrap(), *v))
        .collect();
    (g, dist)
}

pub fn degroup_round_trip(seed: u64, n: usize) -> Outcome {
    let (graph, mut dist) = ingested_random_graph(seed, 400);
    for r in OriginalRelation::ALL {
        dist.entry(r).or_insert(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let human = graph.triplets();
    let heads: Vec<&EventId> = graph.clusters().iter().map(|c| &c.base).collect();
    let mut predicted = Vec::with_capacity(n);
    while predicted.len() < n {
        let t = human.choose(&mut rng).unwrap();
        let head = *heads.choose(&mut rng).unwrap();
        if head == &t.tail {
            continue;
        }
        predicted.push(Triplet {
            head: head.clone(),
            relation: t.relation,
            tail: t.tail.clone(),
            provenance: Provenance::Predicted,
            confidence: Some(1.0),
        });
    }
    let out = degroup_relations(&graph, &predicted, &dist, &mut rng).map_err(|e| e.to_string())?;
    ensure(out.skipped == 0 && out.triplets.len() == n, || {
        format!("{} of {n} exported, {} skipped", out.triplets.len(), out.skipped)
    })?;
    let mut problems = Vec::new();
    for (d, p) in out.triplets.iter().zip(&predicted) {
        let want = (graph.event(&p.tail).unwrap().text.clone(), p.relation);
        let back = normalize_tail(&RawAnnotation::new(d.tail.as_str(), d.relation)).map(|x| (x.text, x.grouped_relation));
        if d.relation.group() != p.relation || back.as_ref() != Some(&want) {
            problems.push(format!("{:?}/{} -> {back:?}, expected {want:?}", d.tail, d.relation));
        }
    }
    if !problems.is_empty() {
        return fail_with(problems);
    }
    Ok(format!("{n} degrouped predictions normalize back exactly"))
}
