use std::path::Path;

use densekg_core::completion::{self, CompletionPlan, Thresholds};
use densekg_core::dataset::{build_training_set, read_split, read_training_set, write_split, write_training_set, SamplingConfig};
use densekg_core::eval::{
    degroup_relations, degrouped_to_tsv, evaluate_precision, export_human_eval_sample, read_distribution,
    AnnotatedSubgraph,
};
use densekg_core::graph::{ClusterId, Graph, Triplet};
use densekg_core::ingest::ingest_file;
use densekg_core::paths::{count_k_hop, count_k_hop_checkpointed, paths_to_tsv, sample_paths, SampleRule, Stats};
use densekg_core::scorer::{BuiltinScorer, RelationScorer, RemoteScorer};
use densekg_core::store::{load_graph, read_triplets, save_graph, write_atomic, write_triplets};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{resolve_scorer, RunConfig, ScorerChoice, SCORER_URL_ENV};
use crate::error::{CliError, Input, Internal};
use crate::ScorerArgs;

pub const DISTRIBUTION_FILE: &str = "original_relations.json";
pub const SPLITS_DIR: &str = "splits";

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
}

impl Context {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{}: no such file", path.display())))
    }
}

fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{}: no such directory", path.display())))
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

fn open_graph(dir: &Path) -> Result<Graph, CliError> {
    require_dir(dir)?;
    load_graph(dir).input()
}

/// Predicted triplets whose events all exist in `graph`.
fn open_predictions(graph: &Graph, path: &Path) -> Result<Vec<Triplet>, CliError> {
    require_file(path)?;
    let predicted = read_triplets(path).input()?;
    for (i, t) in predicted.iter().enumerate() {
        for id in [&t.head, &t.tail] {
            if graph.node(id).is_none() {
                return Err(CliError::invalid(format!(
                    "{}:{}: event `{id}` is not in the graph",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    Ok(predicted)
}

/// The graph with `predicted` merged in, when given.
fn open_graph_with(dir: &Path, predicted: Option<&Path>) -> Result<Graph, CliError> {
    let mut graph = open_graph(dir)?;
    if let Some(p) = predicted {
        for t in open_predictions(&graph, p)? {
            graph
                .add_triplet(&t.head, t.relation, &t.tail, t.provenance, t.confidence)
                .input()?;
        }
    }
    Ok(graph)
}

fn open_scorer(ctx: &Context, args: &ScorerArgs) -> Result<Box<dyn RelationScorer>, CliError> {
    let choice = resolve_scorer(
        args.model.as_deref(),
        args.scorer_url.as_deref(),
        &ctx.config,
        std::env::var(SCORER_URL_ENV).ok(),
    )?;
    Ok(match choice {
        ScorerChoice::Builtin(path) => {
            require_file(&path)?;
            Box::new(BuiltinScorer::load(&path).input()?)
        }
        ScorerChoice::Remote(url) => Box::new(RemoteScorer::new(&url).connect().internal()?),
    })
}

pub fn ingest(_ctx: &Context, input: &Path, out: &Path) -> Result<(), CliError> {
    require_file(input)?;
    let (graph, report) = ingest_file(input).input()?;
    save_graph(&graph, out).internal()?;
    for (name, clusters) in &report.splits {
        let ids: Vec<ClusterId> = clusters.iter().map(|c| ClusterId::from(c.as_str())).collect();
        write_split(&out.join(SPLITS_DIR).join(format!("{name}.txt")), &ids).internal()?;
    }
    write_atomic(&out.join(DISTRIBUTION_FILE), &json_bytes(&report.relation_distribution)).internal()?;
    log::info!(
        "{} events, {} triplets, {} clusters; {} of {} annotations dropped",
        report.events,
        report.triplets,
        report.clusters,
        report.dropped,
        report.annotations
    );
    print_json(&report);
    Ok(())
}

pub fn make_dataset(
    ctx: &Context,
    graph_dir: &Path,
    split: Option<&Path>,
    out: &Path,
    random_ratio: Option<f64>,
    persona_ratio: Option<f64>,
) -> Result<(), CliError> {
    let config = SamplingConfig {
        random_ratio: ctx.config.random_ratio(random_ratio),
        persona_ratio: ctx.config.persona_ratio(persona_ratio),
        seed: ctx.seed,
    };
    for (name, r) in [("random ratio", config.random_ratio), ("persona ratio", config.persona_ratio)] {
        if !r.is_finite() || r < 0.0 {
            return Err(CliError::invalid(format!("{name} must be a non-negative number")));
        }
    }
    let graph = open_graph(graph_dir)?;
    let split_path = split.map_or_else(|| graph_dir.join(SPLITS_DIR).join("train.txt"), Path::to_path_buf);
    require_file(&split_path)?;
    let clusters = read_split(&split_path).input()?;
    let examples = build_training_set(&graph, &clusters, &config).input()?;
    write_training_set(out, &examples).internal()?;
    log::info!("{} examples from {} clusters", examples.len(), clusters.len());
    Ok(())
}

pub struct TrainFlags {
    pub dim: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
}

pub fn train(ctx: &Context, train: &Path, out: &Path, flags: TrainFlags) -> Result<(), CliError> {
    let mut config = ctx.config.builtin(ctx.seed);
    config.dim = flags.dim.unwrap_or(config.dim);
    config.epochs = flags.epochs.unwrap_or(config.epochs);
    config.learning_rate = flags.learning_rate.unwrap_or(config.learning_rate);
    config.batch_size = flags.batch_size.unwrap_or(config.batch_size);
    if config.dim == 0 || config.batch_size == 0 {
        return Err(CliError::invalid("dim and batch size must be positive"));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(CliError::invalid("learning rate must be positive"));
    }
    require_file(train)?;
    let examples = read_training_set(train).input()?;
    let (model, report) = BuiltinScorer::train(&examples, &config).input()?;
    model.save(out).internal()?;
    print_json(&report);
    Ok(())
}

pub fn tune_thresholds(
    ctx: &Context,
    scorer: &ScorerArgs,
    dev: &Path,
    out: &Path,
    objective: Option<completion::Objective>,
) -> Result<(), CliError> {
    require_file(dev)?;
    let gold = AnnotatedSubgraph::read_tsv(dev).input()?;
    if gold.is_empty() {
        return Err(CliError::invalid(format!("{}: no annotated pairs", dev.display())));
    }
    let scorer = open_scorer(ctx, scorer)?;
    let objective = objective.or(ctx.config.tuning.objective).unwrap_or_default();
    let batch = ctx.config.completion.batch_size.unwrap_or(CompletionPlan::default().batch_size);
    let report = completion::tune_thresholds(scorer.as_ref(), &gold, objective, batch).internal()?;
    report.thresholds.save(out).internal()?;
    print_json(&report);
    Ok(())
}

pub struct PlanFlags {
    pub mode: Option<completion::Mode>,
    pub sample_size: Option<usize>,
    pub batch_size: Option<usize>,
}

pub fn complete(
    ctx: &Context,
    scorer: &ScorerArgs,
    graph_dir: &Path,
    thresholds: &Path,
    out: &Path,
    flags: PlanFlags,
    dense_out: Option<&Path>,
) -> Result<(), CliError> {
    let section = &ctx.config.completion;
    let defaults = CompletionPlan::default();
    let plan = CompletionPlan {
        mode: flags.mode.or(section.mode).unwrap_or(defaults.mode),
        cluster_sample_size: flags
            .sample_size
            .or(section.cluster_sample_size)
            .unwrap_or(defaults.cluster_sample_size),
        seed: ctx.seed,
        batch_size: flags.batch_size.or(section.batch_size).unwrap_or(defaults.batch_size),
    };
    require_file(thresholds)?;
    let thresholds = Thresholds::load(thresholds).input()?;
    let mut graph = open_graph(graph_dir)?;
    // catches an oversized sample before any scoring happens
    completion::plan_candidates(&graph, &plan).input()?;
    let scorer = open_scorer(ctx, scorer)?;
    log::info!("scoring with {}", scorer.model_id());
    let predicted = completion::complete(&graph, scorer.as_ref(), &thresholds, &plan).internal()?;
    write_triplets(out, &predicted).internal()?;
    if let Some(dir) = dense_out {
        for t in &predicted {
            graph
                .add_triplet(&t.head, t.relation, &t.tail, t.provenance, t.confidence)
                .internal()?;
        }
        save_graph(&graph, dir).internal()?;
    }
    log::info!("{} links predicted", predicted.len());
    Ok(())
}

pub fn paths(
    ctx: &Context,
    graph_dir: &Path,
    predicted: Option<&Path>,
    k: Option<usize>,
    n: Option<usize>,
    rule: Option<SampleRule>,
    out: &Path,
) -> Result<(), CliError> {
    let section = &ctx.config.paths;
    let k = k.or(section.k).unwrap_or(2);
    let n = n.or(section.n).unwrap_or(100);
    let rule = rule.or(section.rule).unwrap_or(SampleRule::Random);
    if k == 0 {
        return Err(CliError::invalid("k must be at least 1"));
    }
    let graph = open_graph_with(graph_dir, predicted)?;
    let sample = sample_paths(&graph, k, n, rule, &mut ctx.rng());
    if let Some(notice) = &sample.notice {
        log::warn!("{notice}");
    }
    write_atomic(out, paths_to_tsv(&graph, &sample.paths).as_bytes()).internal()?;
    Ok(())
}

pub fn stats(
    graph_dir: &Path,
    predicted: Option<&Path>,
    out: Option<&Path>,
    checkpoint_dir: Option<&Path>,
) -> Result<(), CliError> {
    let graph = open_graph_with(graph_dir, predicted)?;
    let count = |k: usize| -> Result<u64, CliError> {
        match checkpoint_dir {
            Some(dir) => count_k_hop_checkpointed(&graph, k, &dir.join(format!("hop{k}.json")), 1024).internal(),
            None => Ok(count_k_hop(&graph, k)),
        }
    };
    let stats = Stats {
        events: graph.event_count(),
        hop1: count(1)?,
        hop2: count(2)?,
        hop3: count(3)?,
    };
    let tsv = stats.to_tsv();
    if let Some(path) = out {
        write_atomic(path, tsv.as_bytes()).internal()?;
    }
    print!("{tsv}");
    Ok(())
}

pub fn eval(graph_dir: &Path, predicted: &Path, gold: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let graph = open_graph(graph_dir)?;
    let predicted = open_predictions(&graph, predicted)?;
    require_file(gold)?;
    let gold = AnnotatedSubgraph::read_tsv(gold).input()?;
    gold.check_scopes(&graph).input()?;
    let report = evaluate_precision(&graph, &predicted, &gold);
    if report.uncovered > 0 {
        log::info!("{} predictions have no gold label and are not scored", report.uncovered);
    }
    if let Some(path) = out {
        write_atomic(path, &json_bytes(&report)).internal()?;
    }
    print_json(&report);
    Ok(())
}

pub fn export_human_eval(ctx: &Context, graph_dir: &Path, predicted: &Path, n: usize, out: &Path) -> Result<(), CliError> {
    let graph = open_graph(graph_dir)?;
    let predicted = open_predictions(&graph, predicted)?;
    let tsv = export_human_eval_sample(&graph, &predicted, n, &mut ctx.rng()).input()?;
    write_atomic(out, tsv.as_bytes()).internal()?;
    Ok(())
}

pub fn export_degrouped(
    ctx: &Context,
    graph_dir: &Path,
    predicted: &Path,
    distribution: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let graph = open_graph(graph_dir)?;
    let predicted = open_predictions(&graph, predicted)?;
    let dist_path = distribution.map_or_else(|| graph_dir.join(DISTRIBUTION_FILE), Path::to_path_buf);
    require_file(&dist_path)?;
    let dist = read_distribution(&dist_path).input()?;
    let degrouped = degroup_relations(&graph, &predicted, &dist, &mut ctx.rng()).input()?;
    if degrouped.skipped > 0 {
        log::warn!("{} predictions could not be rewritten and were left out", degrouped.skipped);
    }
    write_atomic(out, degrouped_to_tsv(&degrouped.triplets).as_bytes()).internal()?;
    Ok(())
}
