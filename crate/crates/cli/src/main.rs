mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use densekg_core::completion::{Mode, Objective};
use densekg_core::paths::SampleRule;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "densekg", version, about = "Densify an event-centric commonsense knowledge graph")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Size of the worker thread pool.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
}

/// Where a scoring command gets its scores.
#[derive(Args, Debug, Clone)]
pub struct ScorerArgs {
    /// Built-in model file written by `train`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Base URL of a scoring service. Falls back to the config file, then
    /// the DENSEKG_SCORER_URL environment variable.
    #[arg(long)]
    pub scorer_url: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize a raw annotation file into a graph directory.
    Ingest {
        /// CSV with one column per relation, or event/relation/annotation TSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a labeled training set from a split's human triplets.
    MakeDataset {
        #[arg(long)]
        graph: PathBuf,
        /// Cluster ids, one per line [default: <graph>/splits/train.txt].
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        random_ratio: Option<f64>,
        #[arg(long)]
        persona_ratio: Option<f64>,
    },
    /// Train the built-in scorer.
    Train {
        /// Training set written by `make-dataset`.
        #[arg(long)]
        train: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Pick per-relation thresholds on an annotated dev subgraph.
    TuneThresholds {
        #[command(flatten)]
        scorer: ScorerArgs,
        /// Gold TSV: head, tail, gold, scope.
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = parse_objective)]
        objective: Option<Objective>,
    },
    /// Score candidate pairs and write the accepted links.
    Complete {
        #[command(flatten)]
        scorer: ScorerArgs,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        thresholds: PathBuf,
        /// Predicted triplets (JSONL).
        #[arg(long)]
        out: PathBuf,
        /// intra, inter or both.
        #[arg(long, alias = "plan")]
        mode: Option<Mode>,
        /// Number of clusters to sample.
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Also write the graph with the predictions merged in.
        #[arg(long)]
        dense_out: Option<PathBuf>,
    },
    /// Sample k-hop paths.
    Paths {
        #[arg(long)]
        graph: PathBuf,
        /// Predicted triplets to merge in first.
        #[arg(long)]
        predicted: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// random or heuristic.
        #[arg(long)]
        rule: Option<SampleRule>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Event count and 1/2/3-hop path counts as TSV.
    Stats {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        predicted: Option<PathBuf>,
        /// Also write the TSV here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for resumable counting checkpoints.
        #[arg(long)]
        checkpoint_dir: Option<PathBuf>,
    },
    /// Precision of predictions against an annotated subgraph.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample predictions for human judgment.
    ExportHumanEval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Map predictions back to the original nine relations.
    ExportDegrouped {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        /// Relation counts [default: <graph>/original_relations.json].
        #[arg(long)]
        distribution: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "precision" => Ok(Objective::Precision),
        "f1" => Ok(Objective::F1),
        other => Err(format!("unknown objective `{other}` (expected precision or f1)")),
    }
}

fn init_logging(level: &str) -> Result<(), CliError> {
    let filter: log::LevelFilter = level
        .parse()
        .map_err(|_| CliError::invalid(format!("unknown log level `{level}`")))?;
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = RunConfig::load(cli.global.config.as_deref())?;
    let level = cli.global.log_level.clone().or(config.log_level.clone()).unwrap_or_else(|| "info".into());
    init_logging(&level)?;
    if let Some(n) = cli.global.workers.or(config.workers) {
        if n == 0 {
            return Err(CliError::invalid("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    let seed = config.seed(cli.global.seed);
    let ctx = commands::Context { config, seed };
    match cli.command {
        Command::Ingest { input, out } => commands::ingest(&ctx, &input, &out),
        Command::MakeDataset {
            graph,
            split,
            out,
            random_ratio,
            persona_ratio,
        } => commands::make_dataset(&ctx, &graph, split.as_deref(), &out, random_ratio, persona_ratio),
        Command::Train {
            train,
            out,
            dim,
            epochs,
            learning_rate,
            batch_size,
        } => commands::train(
            &ctx,
            &train,
            &out,
            commands::TrainFlags {
                dim,
                epochs,
                learning_rate,
                batch_size,
            },
        ),
        Command::TuneThresholds {
            scorer,
            dev,
            out,
            objective,
        } => commands::tune_thresholds(&ctx, &scorer, &dev, &out, objective),
        Command::Complete {
            scorer,
            graph,
            thresholds,
            out,
            mode,
            sample_size,
            batch_size,
            dense_out,
        } => commands::complete(
            &ctx,
            &scorer,
            &graph,
            &thresholds,
            &out,
            commands::PlanFlags {
                mode,
                sample_size,
                batch_size,
            },
            dense_out.as_deref(),
        ),
        Command::Paths {
            graph,
            predicted,
            k,
            n,
            rule,
            out,
        } => commands::paths(&ctx, &graph, predicted.as_deref(), k, n, rule, &out),
        Command::Stats {
            graph,
            predicted,
            out,
            checkpoint_dir,
        } => commands::stats(&graph, predicted.as_deref(), out.as_deref(), checkpoint_dir.as_deref()),
        Command::Eval {
            graph,
            predicted,
            gold,
            out,
        } => commands::eval(&graph, &predicted, &gold, out.as_deref()),
        Command::ExportHumanEval { graph, predicted, n, out } => {
            commands::export_human_eval(&ctx, &graph, &predicted, n, &out)
        }
        Command::ExportDegrouped {
            graph,
            predicted,
            distribution,
            out,
        } => commands::export_degrouped(&ctx, &graph, &predicted, distribution.as_deref(), &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("densekg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
