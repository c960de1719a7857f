//! Sentence difficulty regression from text.
//!
//! Two model kinds share one interface:
//! - `linear_ngram`: hashed 1-3-gram counts, epsilon-insensitive loss with
//!   L2 penalty, trained by subgradient descent (a linear SVR);
//! - `dense_embed`: mean word vector -> tanh hidden layer -> linear output,
//!   squared loss with L2 penalty, trained by backpropagation.
//!
//! Predictions are clamped to `[0, 1]`.

mod embedding;
mod ngram;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use embedding::EmbeddingTable;
pub use ngram::{NgramFeaturizer, SparseVector};

use crate::corpus::{Corpus, LabelType, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::scoring::{pearson, DifficultyRecord, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    LinearNgram,
    DenseEmbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub kind: RegressorKind,
    /// L2 penalty strength.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Hidden units (dense only).
    pub hidden: usize,
    /// Width of the insensitive zone (linear only).
    pub epsilon: f64,
    pub featurizer: NgramFeaturizer,
    pub seed: u64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        RegressorConfig {
            kind: RegressorKind::LinearNgram,
            lambda: 1e-5,
            learning_rate: 0.05,
            epochs: 20,
            hidden: 32,
            epsilon: 0.05,
            featurizer: NgramFeaturizer::default(),
            seed: 0,
        }
    }
}

impl RegressorConfig {
    pub fn validate(&self) -> Result<()> {
        self.featurizer.validate()?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and non-negative");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if self.epsilon < 0.0 {
            return bad("epsilon must be non-negative");
        }
        if self.kind == RegressorKind::DenseEmbed && self.hidden == 0 {
            return bad("hidden must be positive");
        }
        Ok(())
    }
}

/// One tanh hidden layer over a mean word vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    /// `hidden x dim`
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl DenseNet {
    fn init(dim: usize, hidden: usize, bias: f64, rng: &mut ChaCha8Rng) -> DenseNet {
        let s1 = 1.0 / (dim as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        DenseNet {
            w1: (0..hidden).map(|_| (0..dim).map(|_| rng.gen_range(-s1..s1)).collect()).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-s2..s2)).collect(),
            b2: bias,
        }
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        self.w1.iter().zip(&self.b1).map(|(row, b)| (dot(row, x) + b).tanh()).collect()
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        dot(&self.w2, &self.hidden(x)) + self.b2
    }

    fn squared_norm(&self) -> f64 {
        self.w1.iter().flatten().chain(&self.w2).map(|v| v * v).sum()
    }

    fn zeros_like(&self) -> DenseNet {
        DenseNet {
            w1: self.w1.iter().map(|r| vec![0.0; r.len()]).collect(),
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: 0.0,
        }
    }

    /// Adds `scale * d(0.5 (f(x) - y)^2)/d theta` to `grad`; returns the residual.
    fn backprop(&self, x: &[f64], y: f64, scale: f64, grad: &mut DenseNet) -> f64 {
        let a = self.hidden(x);
        let r = dot(&self.w2, &a) + self.b2 - y;
        grad.b2 += scale * r;
        for j in 0..a.len() {
            grad.w2[j] += scale * r * a[j];
            let delta = scale * r * self.w2[j] * (1.0 - a[j] * a[j]);
            grad.b1[j] += delta;
            for (g, xk) in grad.w1[j].iter_mut().zip(x) {
                *g += delta * xk;
            }
        }
        r
    }
}

/// `(1/n) sum 0.5 (f(x_i) - y_i)^2 + lambda (|W1|^2 + |w2|^2)` and its gradient.
pub fn dense_loss_and_gradient(net: &DenseNet, xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> (f64, DenseNet) {
    let n = xs.len() as f64;
    let mut grad = net.zeros_like();
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let r = net.backprop(x, y, 1.0 / n, &mut grad);
        loss += 0.5 * r * r / n;
    }
    loss += lambda * net.squared_norm();
    for (g, w) in grad.w1.iter_mut().flatten().zip(net.w1.iter().flatten()) {
        *g += 2.0 * lambda * w;
    }
    for (g, w) in grad.w2.iter_mut().zip(&net.w2) {
        *g += 2.0 * lambda * w;
    }
    (loss, grad)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sparse_dot(w: &[f64], x: &SparseVector) -> f64 {
    x.iter().map(|&(i, v)| w[i as usize] * v).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegressorParams {
    Linear { weights: Vec<f64>, bias: f64 },
    Dense(DenseNet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    pub label_type: LabelType,
    pub params: RegressorParams,
    pub config: RegressorConfig,
}

enum Input {
    Sparse(SparseVector),
    Dense(Vec<f64>),
}

fn prepare<S: AsRef<str>>(
    texts: &[Vec<S>],
    config: &RegressorConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<Input>> {
    match config.kind {
        RegressorKind::LinearNgram => Ok(texts.iter().map(|t| Input::Sparse(config.featurizer.featurize(t))).collect()),
        RegressorKind::DenseEmbed => {
            let table = embeddings
                .ok_or_else(|| Error::InvalidConfig("dense_embed regressor needs an embedding table".into()))?;
            Ok(texts.iter().map(|t| Input::Dense(table.mean(t))).collect())
        }
    }
}

impl RegressorModel {
    fn raw(&self, input: &Input) -> f64 {
        match (&self.params, input) {
            (RegressorParams::Linear { weights, bias }, Input::Sparse(x)) => sparse_dot(weights, x) + bias,
            (RegressorParams::Dense(net), Input::Dense(x)) => net.forward(x),
            _ => unreachable!("input prepared for the model kind"),
        }
    }

    /// Predicted difficulty in `[0, 1]` for one token sequence.
    pub fn predict<S: AsRef<str>>(&self, words: &[S], embeddings: Option<&EmbeddingTable>) -> Result<f64> {
        let words: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
        Ok(self.predict_many(&[words], embeddings)?[0])
    }

    pub fn predict_many<S: AsRef<str>>(
        &self,
        texts: &[Vec<S>],
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<Vec<f64>> {
        Ok(prepare(texts, &self.config, embeddings)?.iter().map(|x| self.raw(x).clamp(0.0, 1.0)).collect())
    }

    pub fn weight_norm(&self) -> f64 {
        match &self.params {
            RegressorParams::Linear { weights, .. } => weights.iter().map(|w| w * w).sum::<f64>().sqrt(),
            RegressorParams::Dense(net) => net.squared_norm().sqrt(),
        }
    }

    pub fn to_json(&self, plan: Option<&Value>) -> Result<String> {
        let (bias, weights, dense) = match &self.params {
            RegressorParams::Linear { weights, bias } => {
                let nz: BTreeMap<u32, f64> =
                    weights.iter().enumerate().filter(|(_, w)| **w != 0.0).map(|(i, w)| (i as u32, *w)).collect();
                (Some(*bias), Some(nz), None)
            }
            RegressorParams::Dense(net) => (None, None, Some(net.clone())),
        };
        let file = RegressorFile {
            schema_version: SCHEMA_VERSION.into(),
            kind: "regressor".into(),
            label_type: self.label_type,
            config: self.config.clone(),
            bias,
            weights,
            dense,
            plan: plan.cloned(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RegressorFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION || file.kind != "regressor" {
            return Err(Error::InvalidConfig("not a version 1 regressor model".into()));
        }
        file.config.validate()?;
        let params = match (file.config.kind, file.weights, file.bias, file.dense) {
            (RegressorKind::LinearNgram, Some(nz), Some(bias), None) => {
                let mut weights = vec![0.0; file.config.featurizer.hash_dim];
                for (i, w) in nz {
                    *weights
                        .get_mut(i as usize)
                        .ok_or_else(|| Error::InvalidConfig(format!("weight index {i} outside hash_dim")))? = w;
                }
                RegressorParams::Linear { weights, bias }
            }
            (RegressorKind::DenseEmbed, None, None, Some(net)) => RegressorParams::Dense(net),
            _ => return Err(Error::InvalidConfig("regressor parameters do not match its kind".into())),
        };
        Ok(RegressorModel { label_type: file.label_type, params, config: file.config })
    }
}

#[derive(Serialize, Deserialize)]
struct RegressorFile {
    schema_version: String,
    kind: String,
    label_type: LabelType,
    config: RegressorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<BTreeMap<u32, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dense: Option<DenseNet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<Value>,
}

fn fit_linear(xs: &[SparseVector], ys: &[f64], config: &RegressorConfig, rng: &mut ChaCha8Rng) -> RegressorParams {
    let n = ys.len();
    let mut v = vec![0.0; config.featurizer.hash_dim];
    let mut scale = 1.0;
    let mut bias = ys.iter().sum::<f64>() / n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let eta = config.learning_rate / (1.0 + epoch as f64).sqrt();
        for &i in &order {
            let r = scale * sparse_dot(&v, &xs[i]) + bias - ys[i];
            let shrink = 1.0 - 2.0 * eta * config.lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if r.abs() > config.epsilon {
                let g = r.signum();
                for &(j, x) in &xs[i] {
                    v[j as usize] -= eta * g * x / scale;
                }
                bias -= eta * g;
            }
            if scale < 1e-6 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
    }
    v.iter_mut().for_each(|w| *w *= scale);
    RegressorParams::Linear { weights: v, bias }
}

fn fit_dense(xs: &[Vec<f64>], ys: &[f64], config: &RegressorConfig, rng: &mut ChaCha8Rng) -> RegressorParams {
    let n = ys.len();
    let dim = xs.first().map_or(0, Vec::len);
    let mean = ys.iter().sum::<f64>() / n as f64;
    let mut net = DenseNet::init(dim, config.hidden, mean, rng);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let eta = config.learning_rate / (1.0 + epoch as f64).sqrt();
        for &i in &order {
            let (_, grad) = dense_loss_and_gradient(&net, std::slice::from_ref(&xs[i]), &ys[i..=i], config.lambda);
            for (w, g) in net.w1.iter_mut().flatten().zip(grad.w1.iter().flatten()) {
                *w -= eta * g;
            }
            for (w, g) in net.b1.iter_mut().zip(&grad.b1) {
                *w -= eta * g;
            }
            for (w, g) in net.w2.iter_mut().zip(&grad.w2) {
                *w -= eta * g;
            }
            net.b2 -= eta * grad.b2;
        }
    }
    RegressorParams::Dense(net)
}

fn check_training_data<S>(texts: &[Vec<S>], targets: &[f64]) -> Result<()> {
    if texts.len() != targets.len() {
        return Err(Error::LengthMismatch(texts.len(), targets.len()));
    }
    if texts.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: texts.len() });
    }
    if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::InvalidConfig(format!("target {t} outside [0, 1]")));
    }
    Ok(())
}

/// Fits a regressor to `(token sequence, difficulty)` pairs.
pub fn train_regressor<S: AsRef<str>>(
    texts: &[Vec<S>],
    targets: &[f64],
    label_type: LabelType,
    config: &RegressorConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<RegressorModel> {
    check_training_data(texts, targets)?;
    config.validate()?;
    let inputs = prepare(texts, config, embeddings)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = match config.kind {
        RegressorKind::LinearNgram => {
            let xs: Vec<SparseVector> =
                inputs.into_iter().map(|i| if let Input::Sparse(x) = i { x } else { unreachable!() }).collect();
            fit_linear(&xs, targets, config, &mut rng)
        }
        RegressorKind::DenseEmbed => {
            let xs: Vec<Vec<f64>> =
                inputs.into_iter().map(|i| if let Input::Dense(x) = i { x } else { unreachable!() }).collect();
            fit_dense(&xs, targets, config, &mut rng)
        }
    };
    let model = RegressorModel { label_type, params, config: config.clone() };
    if !model.weight_norm().is_finite() {
        return Err(Error::NonFinite("regressor training".into()));
    }
    Ok(model)
}

/// One predicted record per corpus sentence.
pub fn predict_difficulty(
    model: &RegressorModel,
    corpus: &Corpus,
    label_type: LabelType,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<DifficultyRecord>> {
    if model.label_type != label_type {
        return Err(Error::LabelMismatch { expected: label_type, found: model.label_type });
    }
    let texts: Vec<Vec<&str>> = corpus.sentences().map(|s| s.words().collect()).collect();
    let scores = model.predict_many(&texts, embeddings)?;
    Ok(corpus
        .sentences()
        .zip(scores)
        .map(|(s, score)| DifficultyRecord { sent_id: s.sent_id.clone(), label_type, score, source: Source::Predicted })
        .collect())
}

/// Pearson correlation between predictions and references matched by sentence id.
pub fn evaluate_regressor(predictions: &[DifficultyRecord], references: &[DifficultyRecord]) -> Result<f64> {
    let refs: HashMap<&str, f64> = references.iter().map(|r| (r.sent_id.as_str(), r.score)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        predictions.iter().filter_map(|p| refs.get(p.sent_id.as_str()).map(|&r| (p.score, r))).unzip();
    if xs.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: xs.len() });
    }
    pearson(&xs, &ys)?.ok_or_else(|| Error::Undefined("constant predictions or references".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub best: RegressorConfig,
    /// Mean held-out Pearson per grid entry; `None` when undefined on every fold.
    pub mean_pearson: Vec<Option<f64>>,
}

/// Exhaustive search over `grid` by k-fold cross-validated Pearson.
///
/// Folds come from a seeded shuffle of example indices. A config's score is
/// the mean over folds where the held-out correlation is defined. Ties keep
/// the earlier grid entry.
pub fn grid_search<S: AsRef<str> + Sync>(
    texts: &[Vec<S>],
    targets: &[f64],
    label_type: LabelType,
    grid: &[RegressorConfig],
    k: usize,
    seed: u64,
    embeddings: Option<&EmbeddingTable>,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if k < 2 || k > texts.len() {
        return Err(Error::InvalidConfig(format!("cannot make {k} folds from {} examples", texts.len())));
    }
    check_training_data(texts, targets)?;
    let mut order: Vec<usize> = (0..texts.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; texts.len()];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = pos % k;
        }
        f
    };

    let mean_pearson: Vec<Option<f64>> = grid
        .par_iter()
        .map(|config| -> Result<Option<f64>> {
            let mut sum = 0.0;
            let mut defined = 0;
            for fold in 0..k {
                let split = |held: bool| -> (Vec<&Vec<S>>, Vec<f64>) {
                    (0..texts.len()).filter(|&i| (fold_of[i] == fold) == held).map(|i| (&texts[i], targets[i])).unzip()
                };
                let (train_x, train_y) = split(false);
                let (test_x, test_y) = split(true);
                let train_x: Vec<Vec<&str>> = train_x.iter().map(|t| t.iter().map(AsRef::as_ref).collect()).collect();
                let test_x: Vec<Vec<&str>> = test_x.iter().map(|t| t.iter().map(AsRef::as_ref).collect()).collect();
                let model = train_regressor(&train_x, &train_y, label_type, config, embeddings)?;
                let preds = model.predict_many(&test_x, embeddings)?;
                if preds.len() >= 2 {
                    if let Some(r) = pearson(&preds, &test_y)? {
                        sum += r;
                        defined += 1;
                    }
                }
            }
            Ok((defined > 0).then(|| sum / defined as f64))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, f64)> = None;
    for (i, score) in mean_pearson.iter().enumerate() {
        if let Some(s) = *score {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    let (best_index, _) = best.ok_or_else(|| Error::Undefined("every grid entry has undefined Pearson".into()))?;
    Ok(GridSearchResult { best_index, best: grid[best_index].clone(), mean_pearson })
}
