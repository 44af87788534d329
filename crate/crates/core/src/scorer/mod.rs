//! Relation scoring over (head, tail) event pairs.
//!
//! A score is a linkability gate plus a distribution over the six grouped
//! relations. The decision score for relation `k` is `gate + probs[k]`, so it
//! lives in `[0, 2]` and per-relation thresholds are set on that range.

mod builtin;
mod remote;

pub use builtin::{
    pool, BuiltinConfig, BuiltinScorer, EncodedExample, EncoderOutput, Gradients, ScorerParams,
    TrainReport, Vocab, UNK,
};
pub use remote::{RemoteScorer, ScoreRequest, ScoreResponse, WirePair, WireScore, PROTOCOL_VERSION};

use crate::completion::Thresholds;
use crate::error::ScorerError;
use crate::relation::{Relation, K};

/// Tolerance on the sum of `probs`.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    gate: f64,
    probs: [f64; K],
}

impl ScoreVector {
    pub fn new(gate: f64, probs: [f64; K]) -> Result<Self, String> {
        if !gate.is_finite() || !(0.0..=1.0).contains(&gate) {
            return Err(format!("gate {gate} outside [0, 1]"));
        }
        for (k, p) in probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(p) {
                return Err(format!("{} probability {p} outside [0, 1]", Relation::ALL[k]));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(format!("probabilities sum to {sum}"));
        }
        Ok(ScoreVector { gate, probs })
    }

    pub fn gate(&self) -> f64 {
        self.gate
    }

    pub fn probs(&self) -> &[f64; K] {
        &self.probs
    }

    pub fn combined(&self) -> [f64; K] {
        self.probs.map(|p| self.gate + p)
    }

    /// Most probable relation; ties go to the earlier relation.
    pub fn argmax(&self) -> Relation {
        let mut best = 0;
        for k in 1..K {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        Relation::ALL[best]
    }

    /// The argmax relation with its combined score.
    pub fn best(&self) -> (Relation, f64) {
        let r = self.argmax();
        (r, self.gate + self.probs[r.index()])
    }
}

/// Anything that maps a batch of (head, tail) texts to score vectors, one
/// per pair and in input order.
pub trait RelationScorer: Send + Sync {
    fn model_id(&self) -> String;
    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ScoreVector>, ScorerError>;
}

/// The single-relation decision: the argmax relation if its combined score
/// clears that relation's threshold, `None` (NoLink) otherwise.
pub fn decide(score: &ScoreVector, thresholds: &Thresholds) -> Option<(Relation, f64)> {
    let (r, s) = score.best();
    (s >= thresholds.get(r)).then_some((r, s))
}

pub fn predict_relation(
    scorer: &dyn RelationScorer,
    head: &str,
    tail: &str,
    thresholds: &Thresholds,
) -> Result<Option<(Relation, f64)>, ScorerError> {
    let scores = scorer.score_batch(&[(head, tail)])?;
    Ok(decide(&scores[0], thresholds))
}

/// Wraps a plain function as a scorer. Useful for fixtures and mocks.
pub struct FnScorer<F> {
    id: String,
    f: F,
}

impl<F> FnScorer<F>
where
    F: Fn(&str, &str) -> ScoreVector + Send + Sync,
{
    pub fn new(id: impl Into<String>, f: F) -> Self {
        FnScorer { id: id.into(), f }
    }
}

impl<F> RelationScorer for FnScorer<F>
where
    F: Fn(&str, &str) -> ScoreVector + Send + Sync,
{
    fn model_id(&self) -> String {
        self.id.clone()
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ScoreVector>, ScorerError> {
        Ok(pairs.iter().map(|(h, t)| (self.f)(h, t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(gate: f64) -> ScoreVector {
        ScoreVector::new(gate, [1.0 / 6.0; K]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ScoreVector::new(1.2, [1.0 / 6.0; K]).is_err());
        assert!(ScoreVector::new(0.5, [0.15; K]).is_err());
        assert!(ScoreVector::new(0.5, [f64::NAN, 0.2, 0.2, 0.2, 0.2, 0.2]).is_err());
        let mut p = [0.15; K];
        p[0] = 0.25;
        assert!(ScoreVector::new(0.5, p).is_ok());
    }

    #[test]
    fn threshold_bounds() {
        let s = ScoreVector::new(0.1, [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(decide(&s, &Thresholds::uniform(0.0)), Some((Relation::XAfter, 1.1)));
        assert_eq!(decide(&uniform(1.0), &Thresholds::uniform(2.0 + 1e-9)), None);
        // 0.5 + 1/6 = 0.6667 < 0.7
        assert_eq!(decide(&uniform(0.5), &Thresholds::uniform(0.7)), None);
        assert_eq!(decide(&uniform(0.5), &Thresholds::uniform(0.6)).map(|d| d.0), Some(Relation::XIntent));
    }
}
