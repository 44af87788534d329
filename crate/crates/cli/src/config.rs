//! The TOML run configuration. Every field is optional; command-line flags
//! override whatever the file sets.

use std::path::{Path, PathBuf};

use densekg_core::completion::{Mode, Objective};
use densekg_core::dataset::{DEFAULT_PERSONA_RATIO, DEFAULT_RANDOM_RATIO};
use densekg_core::paths::SampleRule;
use densekg_core::scorer::BuiltinConfig;
use serde::Deserialize;

use crate::error::CliError;

pub const SCORER_URL_ENV: &str = "DENSEKG_SCORER_URL";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub log_level: Option<String>,
    pub sampling: SamplingSection,
    pub train: TrainSection,
    pub completion: CompletionSection,
    pub tuning: TuningSection,
    pub paths: PathsSection,
    pub scorer: ScorerSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub random_ratio: Option<f64>,
    pub persona_ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub dim: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub init_range: Option<f64>,
    pub min_freq: Option<usize>,
    pub max_tokens: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletionSection {
    pub mode: Option<Mode>,
    pub cluster_sample_size: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningSection {
    pub objective: Option<Objective>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub rule: Option<SampleRule>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSection {
    /// Built-in model file.
    pub model: Option<PathBuf>,
    /// Base URL of a remote scoring service.
    pub url: Option<String>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("sampling.random_ratio", self.sampling.random_ratio),
            ("sampling.persona_ratio", self.sampling.persona_ratio),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return Err(CliError::invalid(format!("{name} must be a non-negative number")));
                }
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::invalid("workers must be at least 1"));
        }
        if self.scorer.model.is_some() && self.scorer.url.is_some() {
            return Err(CliError::invalid("config selects both scorer.model and scorer.url"));
        }
        Ok(())
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }

    pub fn random_ratio(&self, flag: Option<f64>) -> f64 {
        flag.or(self.sampling.random_ratio).unwrap_or(DEFAULT_RANDOM_RATIO)
    }

    pub fn persona_ratio(&self, flag: Option<f64>) -> f64 {
        flag.or(self.sampling.persona_ratio).unwrap_or(DEFAULT_PERSONA_RATIO)
    }

    pub fn builtin(&self, seed: u64) -> BuiltinConfig {
        let d = BuiltinConfig::default();
        let t = &self.train;
        BuiltinConfig {
            dim: t.dim.unwrap_or(d.dim),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            epochs: t.epochs.unwrap_or(d.epochs),
            init_range: t.init_range.unwrap_or(d.init_range),
            min_freq: t.min_freq.unwrap_or(d.min_freq),
            max_tokens: t.max_tokens.unwrap_or(d.max_tokens),
            seed,
        }
    }
}

/// Which scorer a command should use, resolved from flags, then the config
/// file, then the environment.
#[derive(Clone, Debug, PartialEq)]
pub enum ScorerChoice {
    Builtin(PathBuf),
    Remote(String),
}

pub fn resolve_scorer(
    model: Option<&Path>,
    url: Option<&str>,
    config: &RunConfig,
    env_url: Option<String>,
) -> Result<ScorerChoice, CliError> {
    match (model, url) {
        (Some(_), Some(_)) => return Err(CliError::invalid("pass either --model or --scorer-url, not both")),
        (Some(m), None) => return Ok(ScorerChoice::Builtin(m.to_path_buf())),
        (None, Some(u)) => return Ok(ScorerChoice::Remote(u.to_string())),
        (None, None) => {}
    }
    if let Some(m) = &config.scorer.model {
        return Ok(ScorerChoice::Builtin(m.clone()));
    }
    if let Some(u) = config.scorer.url.clone().or(env_url.filter(|u| !u.is_empty())) {
        return Ok(ScorerChoice::Remote(u));
    }
    Err(CliError::invalid(format!(
        "no scorer selected: pass --model or --scorer-url, set [scorer] in the config, or set {SCORER_URL_ENV}"
    )))
}
