//! HTTP client for an external scoring service.
//!
//! `POST /score` takes `{"v": 1, "pairs": [{"head", "tail"}, ...]}` and
//! answers `{"v": 1, "scores": [{"gate", "probs": {relation: p}}, ...]}`;
//! `GET /health` answers `{"status": "ok", "model": name}`.

use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{RelationScorer, ScoreVector};
use crate::error::ScorerError;
use crate::relation::{Relation, K};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WirePair {
    pub head: String,
    pub tail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub v: u32,
    pub pairs: Vec<WirePair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireScore {
    pub gate: f64,
    pub probs: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub v: u32,
    pub scores: Vec<WireScore>,
}

#[derive(Deserialize)]
struct Health {
    status: String,
    model: String,
}

impl WireScore {
    pub fn from_vector(s: &ScoreVector) -> Self {
        WireScore {
            gate: s.gate(),
            probs: Relation::ALL
                .iter()
                .map(|r| (r.as_str().to_string(), s.probs()[r.index()]))
                .collect(),
        }
    }

    /// Checks the score against the score-vector invariants; `index` is the
    /// pair's position in the request.
    pub fn to_vector(&self, index: usize) -> Result<ScoreVector, ScorerError> {
        let invalid = |message: String| ScorerError::InvalidScore { index, message };
        let mut probs = [0.0; K];
        for r in Relation::ALL {
            probs[r.index()] = *self
                .probs
                .get(r.as_str())
                .ok_or_else(|| invalid(format!("missing probability for {r}")))?;
        }
        if let Some(extra) = self.probs.keys().find(|k| k.parse::<Relation>().is_err()) {
            return Err(invalid(format!("unknown relation `{extra}`")));
        }
        ScoreVector::new(self.gate, probs).map_err(invalid)
    }
}

pub struct RemoteScorer {
    base: String,
    agent: ureq::Agent,
    attempts: usize,
    backoff: Duration,
    model: Option<String>,
}

enum Failure {
    Transient(String),
    Fatal(ScorerError),
}

impl RemoteScorer {
    pub fn new(base_url: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        RemoteScorer {
            base: base_url.trim_end_matches('/').to_string(),
            agent: ureq::Agent::new_with_config(config),
            attempts: 3,
            backoff: Duration::from_millis(200),
            model: None,
        }
    }

    /// Total tries per request (at least one) and the base delay between
    /// them, doubled after each failure.
    pub fn with_retries(mut self, attempts: usize, backoff: Duration) -> Self {
        self.attempts = attempts.max(1);
        self.backoff = backoff;
        self
    }

    /// Queries `/health` and remembers the reported model name.
    pub fn connect(mut self) -> Result<Self, ScorerError> {
        let model = self.health()?;
        self.model = Some(model);
        Ok(self)
    }

    pub fn health(&self) -> Result<String, ScorerError> {
        let url = format!("{}/health", self.base);
        let h: Health = self.retrying(|| {
            let mut resp = self.agent.get(&url).call().map_err(classify)?;
            resp.body_mut()
                .read_json()
                .map_err(|e| Failure::Fatal(ScorerError::Protocol(format!("health response: {e}"))))
        })?;
        if h.status != "ok" {
            return Err(ScorerError::Protocol(format!("service status `{}`", h.status)));
        }
        Ok(h.model)
    }

    fn retrying<T>(&self, mut call: impl FnMut() -> Result<T, Failure>) -> Result<T, ScorerError> {
        let mut delay = self.backoff;
        let mut last = String::new();
        for attempt in 1..=self.attempts {
            match call() {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    log::warn!("scorer request failed (attempt {attempt}/{}): {msg}", self.attempts);
                    last = msg;
                    if attempt < self.attempts {
                        thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(ScorerError::Transport {
            attempts: self.attempts,
            message: last,
        })
    }
}

fn classify(e: ureq::Error) -> Failure {
    match e {
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
            Failure::Transient(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => Failure::Fatal(ScorerError::Protocol(format!("HTTP {code}"))),
        ureq::Error::Io(_)
        | ureq::Error::Timeout(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::Protocol(_) => Failure::Transient(e.to_string()),
        other => Failure::Fatal(ScorerError::Protocol(other.to_string())),
    }
}

impl RelationScorer for RemoteScorer {
    fn model_id(&self) -> String {
        match &self.model {
            Some(m) => format!("remote:{m}"),
            None => format!("remote:{}", self.base),
        }
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ScoreVector>, ScorerError> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        for (i, (h, t)) in pairs.iter().enumerate() {
            if h.trim().is_empty() || t.trim().is_empty() {
                return Err(ScorerError::EmptyText { index: i });
            }
        }
        let request = ScoreRequest {
            v: PROTOCOL_VERSION,
            pairs: pairs
                .iter()
                .map(|(h, t)| WirePair {
                    head: h.to_string(),
                    tail: t.to_string(),
                })
                .collect(),
        };
        let url = format!("{}/score", self.base);
        let response: ScoreResponse = self.retrying(|| {
            let mut resp = self.agent.post(&url).send_json(&request).map_err(classify)?;
            resp.body_mut()
                .read_json()
                .map_err(|e| Failure::Fatal(ScorerError::Protocol(format!("malformed response: {e}"))))
        })?;
        if response.v != PROTOCOL_VERSION {
            return Err(ScorerError::Protocol(format!(
                "service speaks protocol v{}, expected v{PROTOCOL_VERSION}",
                response.v
            )));
        }
        if response.scores.len() != pairs.len() {
            return Err(ScorerError::Protocol(format!(
                "{} scores for {} pairs",
                response.scores.len(),
                pairs.len()
            )));
        }
        response
            .scores
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_vector(i))
            .collect()
    }
}
