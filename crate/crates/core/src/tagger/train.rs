//! Dense parameter layout, weighted objective and the AdaGrad trainer.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::crf::{posterior, NUM_TAGS};
use super::TaggerConfig;
use crate::error::{Error, Result};

/// Maps hashed feature ids to dense rows, in order of first appearance.
#[derive(Debug, Default, Clone)]
pub(crate) struct FeatureIndex {
    pub ids: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl FeatureIndex {
    pub fn insert(&mut self, id: u64) -> usize {
        *self.lookup.entry(id).or_insert_with(|| {
            self.ids.push(id);
            self.ids.len() - 1
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Encoded {
    pub feats: Vec<Vec<usize>>,
    pub tags: Vec<usize>,
    /// `None` for the unweighted objective.
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub emit: Vec<[f64; NUM_TAGS]>,
    pub trans: [[f64; NUM_TAGS]; NUM_TAGS],
}

impl Dense {
    pub fn zeros(n_features: usize) -> Dense {
        Dense { emit: vec![[0.0; NUM_TAGS]; n_features], trans: [[0.0; NUM_TAGS]; NUM_TAGS] }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.emit.iter().flatten().chain(self.trans.iter().flatten())
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.emit.iter_mut().flatten().chain(self.trans.iter_mut().flatten())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values().map(|v| v * v).sum()
    }

    pub fn emissions(&self, feats: &[Vec<usize>]) -> Vec<[f64; NUM_TAGS]> {
        feats
            .iter()
            .map(|fs| {
                let mut e = [0.0; NUM_TAGS];
                for &f in fs {
                    for (y, w) in self.emit[f].iter().enumerate() {
                        e[y] += w;
                    }
                }
                e
            })
            .collect()
    }
}

fn scaled(weight: Option<f64>, v: f64) -> f64 {
    match weight {
        Some(w) => w * v,
        None => v,
    }
}

/// Adds one example's (weighted) gradient to `grad` and returns its
/// (weighted) negative log-likelihood. Zero-weight examples are skipped.
pub(crate) fn accumulate(params: &Dense, ex: &Encoded, grad: &mut Dense) -> Result<f64> {
    if ex.weight == Some(0.0) {
        return Ok(0.0);
    }
    let emissions = params.emissions(&ex.feats);
    let post = posterior(&emissions, &params.trans, &ex.tags)?;
    for (t, fs) in ex.feats.iter().enumerate() {
        let mut g = post.unary[t];
        g[ex.tags[t]] -= 1.0;
        for &f in fs {
            for y in 0..NUM_TAGS {
                grad.emit[f][y] += scaled(ex.weight, g[y]);
            }
        }
    }
    let mut observed = [[0.0; NUM_TAGS]; NUM_TAGS];
    for w in ex.tags.windows(2) {
        observed[w[0]][w[1]] += 1.0;
    }
    for a in 0..NUM_TAGS {
        for b in 0..NUM_TAGS {
            grad.trans[a][b] += scaled(ex.weight, post.pairwise[a][b] - observed[a][b]);
        }
    }
    Ok(scaled(ex.weight, post.nll))
}

/// `sum_i w_i nll_i + lambda * |theta|^2` and its gradient.
pub(crate) fn objective(params: &Dense, batch: &[&Encoded], lambda: f64) -> Result<(f64, Dense)> {
    let mut grad = Dense::zeros(params.emit.len());
    let mut loss = 0.0;
    for ex in batch {
        loss += accumulate(params, ex, &mut grad)?;
    }
    loss += lambda * params.squared_norm();
    for (g, p) in grad.values_mut().zip(params.values()) {
        *g += 2.0 * lambda * p;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("CRF objective".into()));
    }
    Ok((loss, grad))
}

/// Mini-batch AdaGrad. The L2 term is split across the batches of an epoch
/// in proportion to their size. Returns the parameters and the summed batch
/// objective of every epoch.
pub(crate) fn fit(examples: &[Encoded], n_features: usize, config: &TaggerConfig) -> Result<(Dense, Vec<f64>)> {
    if examples.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    if examples.iter().all(|e| e.weight == Some(0.0)) {
        return Err(Error::DegenerateTrainingSet);
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    let mut params = Dense::zeros(n_features);
    let mut accum = Dense::zeros(n_features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let n = examples.len() as f64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Encoded> = chunk.iter().map(|&i| &examples[i]).collect();
            let lambda = config.lambda * batch.len() as f64 / n;
            let (loss, grad) = objective(&params, &batch, lambda)?;
            epoch_loss += loss;
            for ((p, g), h) in params.values_mut().zip(grad.values()).zip(accum.values_mut()) {
                if *g != 0.0 {
                    *h += g * g;
                    *p -= config.learning_rate * g / (h.sqrt() + 1e-8);
                }
            }
        }
        if !epoch_loss.is_finite() || params.values().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("CRF training".into()));
        }
        history.push(epoch_loss);
    }
    Ok((params, history))
}
