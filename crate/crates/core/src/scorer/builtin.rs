//! Built-in trainable scorer.
//!
//! Tokens are lower-cased whitespace words with learned embeddings. The head
//! and tail token matrices are max-pooled and concatenated for the relation
//! head; the gate reads the mean of all token vectors of the pair.
//!
//! Loss per example: binary cross-entropy on the gate against "is linked",
//! plus softmax cross-entropy on the relation head for positives only.
//! Parameters are updated with Adam.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RelationScorer, ScoreVector};
use crate::dataset::TrainingExample;
use crate::error::{IoContext, ScorerError};
use crate::relation::{Relation, K};
use crate::store::write_atomic;

pub const UNK: &str = "<unk>";
const MODEL_FORMAT: &str = "densekg-builtin";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuiltinConfig {
    pub dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_range: f64,
    pub min_freq: usize,
    /// Token budget for a (head, tail) pair.
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for BuiltinConfig {
    fn default() -> Self {
        BuiltinConfig {
            dim: 64,
            learning_rate: 0.05,
            batch_size: 256,
            epochs: 5,
            init_range: 0.05,
            min_freq: 2,
            max_tokens: 100,
            seed: 0,
        }
    }
}

fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(str::to_lowercase)
}

/// Token table with the unknown token at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Keeps tokens seen at least `min_freq` times, in lexicographic order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Vocab {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for tok in tokenize(text) {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut kept: Vec<String> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_freq && t != UNK)
            .map(|(t, _)| t)
            .collect();
        kept.sort_unstable();
        let mut tokens = vec![UNK.to_string()];
        tokens.extend(kept);
        Vocab::from_tokens(tokens).expect("built vocabulary is well formed")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocab, String> {
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(format!("first vocabulary entry must be `{UNK}`"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(format!("duplicate vocabulary entry `{t}`"));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(0)
    }

    pub fn ids(&self, text: &str) -> Vec<u32> {
        tokenize(text).map(|t| self.id(&t)).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Trainable weights. `emb` is `vocab × dim`, `w_c` is `K × 2·dim`, both
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub dim: usize,
    pub vocab: Vocab,
    pub emb: Vec<f64>,
    pub w_t: Vec<f64>,
    pub w_c: Vec<f64>,
}

impl ScorerParams {
    pub fn zeros(vocab: Vocab, dim: usize) -> Self {
        let v = vocab.len();
        ScorerParams {
            dim,
            vocab,
            emb: vec![0.0; v * dim],
            w_t: vec![0.0; dim],
            w_c: vec![0.0; K * 2 * dim],
        }
    }

    pub fn uniform(vocab: Vocab, dim: usize, range: f64, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(vocab, dim);
        for w in p.emb.iter_mut().chain(&mut p.w_t).chain(&mut p.w_c) {
            *w = rng.random_range(-range..=range);
        }
        p
    }

    fn row(&self, id: u32) -> &[f64] {
        let d = self.dim;
        &self.emb[id as usize * d..(id as usize + 1) * d]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub emb: Vec<f64>,
    pub w_t: Vec<f64>,
    pub w_c: Vec<f64>,
}

/// A training or scoring pair after tokenization and truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedExample {
    pub head: Vec<u32>,
    pub tail: Vec<u32>,
    pub linked: bool,
    pub relation: Option<Relation>,
    pub truncated: bool,
}

/// Per-token embeddings of a pair plus the pair-level summary used by the
/// gate.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderOutput {
    pub head: Vec<Vec<f64>>,
    pub tail: Vec<Vec<f64>>,
    pub joint: Vec<f64>,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub examples: usize,
    pub vocab_size: usize,
    pub initial_loss: f64,
    pub epoch_losses: Vec<f64>,
}

/// Element-wise maximum over rows.
pub fn pool(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = rows[0].clone();
    for row in &rows[1..] {
        for (o, x) in out.iter_mut().zip(row) {
            if *x > *o {
                *o = *x;
            }
        }
    }
    out
}

/// Shortens the longer side one token at a time until the pair fits.
fn truncate(head: &mut Vec<u32>, tail: &mut Vec<u32>, budget: usize) -> bool {
    let budget = budget.max(2);
    let mut cut = false;
    while head.len() + tail.len() > budget {
        if head.len() > tail.len() {
            head.pop();
        } else {
            tail.pop();
        }
        cut = true;
    }
    cut
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Forward {
    joint: Vec<f64>,
    x: Vec<f64>,
    /// Token id that wins the max for each dimension of `x`.
    winners: Vec<u32>,
    z: f64,
    logits: [f64; K],
}

impl Forward {
    fn probs(&self) -> [f64; K] {
        let m = self.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e = self.logits.map(|l| (l - m).exp());
        let s: f64 = e.iter().sum();
        e.map(|v| v / s)
    }

    fn log_sum_exp(&self) -> f64 {
        let m = self.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + self.logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    }
}

impl ScorerParams {
    fn forward(&self, head: &[u32], tail: &[u32]) -> Forward {
        let d = self.dim;
        let mut joint = vec![0.0; d];
        for &id in head.iter().chain(tail) {
            for (j, v) in self.row(id).iter().enumerate() {
                joint[j] += v;
            }
        }
        let n = (head.len() + tail.len()) as f64;
        joint.iter_mut().for_each(|v| *v /= n);

        let mut x = vec![f64::NEG_INFINITY; 2 * d];
        let mut winners = vec![0u32; 2 * d];
        for (offset, ids) in [(0, head), (d, tail)] {
            for &id in ids {
                for (j, v) in self.row(id).iter().enumerate() {
                    if *v > x[offset + j] {
                        x[offset + j] = *v;
                        winners[offset + j] = id;
                    }
                }
            }
        }
        let z: f64 = self.w_t.iter().zip(&joint).map(|(a, b)| a * b).sum();
        let mut logits = [0.0; K];
        for (k, l) in logits.iter_mut().enumerate() {
            *l = self.w_c[k * 2 * d..(k + 1) * 2 * d]
                .iter()
                .zip(&x)
                .map(|(a, b)| a * b)
                .sum();
        }
        Forward {
            joint,
            x,
            winners,
            z,
            logits,
        }
    }

    fn example_loss(&self, ex: &EncodedExample) -> f64 {
        let f = self.forward(&ex.head, &ex.tail);
        let y = if ex.linked { 1.0 } else { 0.0 };
        let mut loss = softplus(f.z) - y * f.z;
        if let Some(r) = ex.relation {
            loss += f.log_sum_exp() - f.logits[r.index()];
        }
        loss
    }

    /// Mean loss over `batch`.
    pub fn loss(&self, batch: &[EncodedExample]) -> f64 {
        let per: Vec<f64> = batch.par_iter().map(|ex| self.example_loss(ex)).collect();
        per.iter().sum::<f64>() / batch.len() as f64
    }

    /// Mean loss over `batch` and its gradient with respect to every
    /// parameter group.
    pub fn loss_and_grad(&self, batch: &[EncodedExample]) -> (f64, Gradients) {
        let d = self.dim;
        let mut g = Gradients {
            emb: vec![0.0; self.emb.len()],
            w_t: vec![0.0; d],
            w_c: vec![0.0; self.w_c.len()],
        };
        let mut total = 0.0;
        for ex in batch {
            let f = self.forward(&ex.head, &ex.tail);
            let y = if ex.linked { 1.0 } else { 0.0 };
            total += softplus(f.z) - y * f.z;

            let dz = sigmoid(f.z) - y;
            let n = (ex.head.len() + ex.tail.len()) as f64;
            for j in 0..d {
                g.w_t[j] += dz * f.joint[j];
            }
            for &id in ex.head.iter().chain(&ex.tail) {
                let row = &mut g.emb[id as usize * d..(id as usize + 1) * d];
                for j in 0..d {
                    row[j] += dz * self.w_t[j] / n;
                }
            }

            if let Some(r) = ex.relation {
                total += f.log_sum_exp() - f.logits[r.index()];
                let mut dl = f.probs();
                dl[r.index()] -= 1.0;
                for (k, dlk) in dl.iter().enumerate() {
                    let w = &self.w_c[k * 2 * d..(k + 1) * 2 * d];
                    let gw = &mut g.w_c[k * 2 * d..(k + 1) * 2 * d];
                    for j in 0..2 * d {
                        gw[j] += dlk * f.x[j];
                        let dx = dlk * w[j];
                        let id = f.winners[j] as usize;
                        g.emb[id * d + j % d] += dx;
                    }
                }
            }
        }
        let m = batch.len() as f64;
        for v in g.emb.iter_mut().chain(&mut g.w_t).chain(&mut g.w_c) {
            *v /= m;
        }
        (total / m, g)
    }
}

struct Adam {
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn update<'a>(&mut self, params: impl Iterator<Item = &'a mut f64>, grads: impl Iterator<Item = &'a f64>) {
        self.step += 1;
        let c1 = 1.0 - Self::B1.powi(self.step);
        let c2 = 1.0 - Self::B2.powi(self.step);
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuiltinScorer {
    params: ScorerParams,
    max_tokens: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    dim: usize,
    max_tokens: usize,
    vocab: Vec<String>,
    embeddings: Vec<Vec<f64>>,
    w_t: Vec<f64>,
    w_c: Vec<Vec<f64>>,
}

impl BuiltinScorer {
    pub fn new(params: ScorerParams, max_tokens: usize) -> Self {
        BuiltinScorer { params, max_tokens }
    }

    pub fn params(&self) -> &ScorerParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ScorerParams {
        &mut self.params
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    fn ids(&self, head: &str, tail: &str, index: usize) -> Result<(Vec<u32>, Vec<u32>, bool), ScorerError> {
        let mut h = self.params.vocab.ids(head);
        let mut t = self.params.vocab.ids(tail);
        if h.is_empty() || t.is_empty() {
            return Err(ScorerError::EmptyText { index });
        }
        let cut = truncate(&mut h, &mut t, self.max_tokens);
        Ok((h, t, cut))
    }

    pub fn encode_example(&self, ex: &TrainingExample, index: usize) -> Result<EncodedExample, ScorerError> {
        let (head, tail, truncated) = self.ids(&ex.head, &ex.tail, index)?;
        Ok(EncodedExample {
            head,
            tail,
            linked: ex.label.relation().is_some(),
            relation: ex.label.relation(),
            truncated,
        })
    }

    pub fn encode(&self, head: &str, tail: &str) -> Result<EncoderOutput, ScorerError> {
        let (h, t, truncated) = self.ids(head, tail, 0)?;
        let rows = |ids: &[u32]| ids.iter().map(|&i| self.params.row(i).to_vec()).collect::<Vec<_>>();
        let f = self.params.forward(&h, &t);
        Ok(EncoderOutput {
            head: rows(&h),
            tail: rows(&t),
            joint: f.joint,
            truncated,
        })
    }

    fn score_ids(&self, h: &[u32], t: &[u32], index: usize) -> Result<ScoreVector, ScorerError> {
        let f = self.params.forward(h, t);
        ScoreVector::new(sigmoid(f.z), f.probs()).map_err(|message| ScorerError::InvalidScore { index, message })
    }

    pub fn score(&self, head: &str, tail: &str) -> Result<ScoreVector, ScorerError> {
        let (h, t, _) = self.ids(head, tail, 0)?;
        self.score_ids(&h, &t, 0)
    }

    pub fn train(
        examples: &[TrainingExample],
        config: &BuiltinConfig,
    ) -> Result<(BuiltinScorer, TrainReport), ScorerError> {
        let positives = examples.iter().filter(|e| e.label.relation().is_some()).count();
        if positives == 0 || positives == examples.len() {
            return Err(ScorerError::Training(
                "examples must include both linked and NoLink pairs".into(),
            ));
        }
        if config.dim == 0 || config.batch_size == 0 {
            return Err(ScorerError::Training("dim and batch_size must be positive".into()));
        }
        if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
            return Err(ScorerError::Training("learning_rate must be positive".into()));
        }
        let vocab = Vocab::build(
            examples.iter().flat_map(|e| [e.head.as_str(), e.tail.as_str()]),
            config.min_freq,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let params = ScorerParams::uniform(vocab, config.dim, config.init_range, &mut rng);
        let mut model = BuiltinScorer::new(params, config.max_tokens);
        let encoded: Vec<EncodedExample> = examples
            .iter()
            .enumerate()
            .map(|(i, e)| model.encode_example(e, i))
            .collect::<Result<_, _>>()?;

        let initial_loss = model.params.loss(&encoded);
        let n_params = model.params.emb.len() + model.params.w_t.len() + model.params.w_c.len();
        let mut adam = Adam::new(config.learning_rate, n_params);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut epoch_losses = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<EncodedExample> = chunk.iter().map(|&i| encoded[i].clone()).collect();
                let (_, g) = model.params.loss_and_grad(&batch);
                let p = &mut model.params;
                adam.update(
                    p.emb.iter_mut().chain(&mut p.w_t).chain(&mut p.w_c),
                    g.emb.iter().chain(&g.w_t).chain(&g.w_c),
                );
            }
            let loss = model.params.loss(&encoded);
            log::info!("epoch {}: loss {loss:.6}", epoch + 1);
            epoch_losses.push(loss);
        }
        let report = TrainReport {
            examples: encoded.len(),
            vocab_size: model.params.vocab.len(),
            initial_loss,
            epoch_losses,
        };
        Ok((model, report))
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        let p = &self.params;
        let d = p.dim;
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            k: K,
            dim: d,
            max_tokens: self.max_tokens,
            vocab: p.vocab.tokens().to_vec(),
            embeddings: p.emb.chunks(d).map(<[f64]>::to_vec).collect(),
            w_t: p.w_t.clone(),
            w_c: p.w_c.chunks(2 * d).map(<[f64]>::to_vec).collect(),
        };
        let mut bytes = serde_json::to_vec(&file).expect("model serializes");
        bytes.push(b'\n');
        Ok(write_atomic(path, &bytes)?)
    }

    pub fn load(path: &Path) -> Result<BuiltinScorer, ScorerError> {
        let bytes = std::fs::read(path).at(path)?;
        let file: ModelFile =
            serde_json::from_slice(&bytes).map_err(|e| ScorerError::Model(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(ScorerError::Model(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        if file.k != K {
            return Err(ScorerError::Model(format!("model has K = {}, expected {K}", file.k)));
        }
        let d = file.dim;
        let bad = |what: &str| ScorerError::Model(format!("{what} has the wrong shape"));
        if d == 0 || file.embeddings.len() != file.vocab.len() || file.embeddings.iter().any(|r| r.len() != d) {
            return Err(bad("embeddings"));
        }
        if file.w_t.len() != d {
            return Err(bad("w_t"));
        }
        if file.w_c.len() != K || file.w_c.iter().any(|r| r.len() != 2 * d) {
            return Err(bad("w_c"));
        }
        let vocab = Vocab::from_tokens(file.vocab).map_err(ScorerError::Model)?;
        let params = ScorerParams {
            dim: d,
            vocab,
            emb: file.embeddings.concat(),
            w_t: file.w_t,
            w_c: file.w_c.concat(),
        };
        if params.emb.iter().chain(&params.w_t).chain(&params.w_c).any(|v| !v.is_finite()) {
            return Err(ScorerError::Model("non-finite weight".into()));
        }
        Ok(BuiltinScorer::new(params, file.max_tokens))
    }
}

impl RelationScorer for BuiltinScorer {
    fn model_id(&self) -> String {
        format!("builtin-d{}-v{}", self.params.dim, self.params.vocab.len())
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<ScoreVector>, ScorerError> {
        pairs
            .par_iter()
            .enumerate()
            .map(|(i, (h, t))| {
                let (h, t, _) = self.ids(h, t, i)?;
                self.score_ids(&h, &t, i)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Source;
    use crate::relation::Label;

    fn vocab() -> Vocab {
        Vocab::build(["a b c", "a b", "c d"], 1)
    }

    #[test]
    fn vocab_layout() {
        let v = Vocab::build(["B a", "a b c"], 2);
        assert_eq!(v.tokens(), &[UNK, "a", "b"]);
        assert_eq!(v.id("c"), 0);
    }

    #[test]
    fn pooling() {
        assert_eq!(pool(&[vec![1.0, -2.0]]), vec![1.0, -2.0]);
        assert_eq!(pool(&[vec![1.0, 0.0], vec![0.0, 1.0]]), vec![1.0, 1.0]);
    }

    #[test]
    fn zero_weights_give_uniform_scores() {
        let s = BuiltinScorer::new(ScorerParams::zeros(vocab(), 4), 100);
        let v = s.score("a b", "c").unwrap();
        assert_eq!(v.gate(), 0.5);
        for p in v.probs() {
            assert!((p - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn truncation_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = BuiltinScorer::new(ScorerParams::uniform(vocab(), 4, 0.05, &mut rng), 3);
        let out = s.encode("a b c a", "d").unwrap();
        assert!(out.truncated);
        assert_eq!((out.head.len(), out.tail.len()), (2, 1));
        let out = s.encode("a", "d").unwrap();
        assert!(!out.truncated);
        assert_eq!(out.head.len(), 1);
        assert_eq!(s.encode("a b", "c").unwrap(), s.encode("a b", "c").unwrap());
    }

    #[test]
    fn empty_text_names_the_pair() {
        let s = BuiltinScorer::new(ScorerParams::zeros(vocab(), 4), 100);
        let err = s.score_batch(&[("a", "b"), ("a", "  ")]).unwrap_err();
        assert_eq!(err.pair_index(), Some(1));
    }

    #[test]
    fn one_sided_training_data_is_rejected() {
        let ex = TrainingExample {
            head: "a".into(),
            tail: "b".into(),
            label: Label::NoLink,
            source: Source::RandomNeg,
        };
        assert!(matches!(
            BuiltinScorer::train(&[ex], &BuiltinConfig::default()),
            Err(ScorerError::Training(_))
        ));
    }

    #[test]
    fn model_file_round_trip_and_k_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = BuiltinScorer::new(ScorerParams::uniform(vocab(), 3, 0.05, &mut rng), 50);
        s.save(&path).unwrap();
        assert_eq!(BuiltinScorer::load(&path).unwrap(), s);

        let text = std::fs::read_to_string(&path).unwrap().replace("\"k\":6", "\"k\":7");
        std::fs::write(&path, text).unwrap();
        let err = BuiltinScorer::load(&path).unwrap_err().to_string();
        assert!(err.contains("K = 7"), "{err}");
    }
}
