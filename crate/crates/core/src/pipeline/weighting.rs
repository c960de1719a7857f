//! Sentence removal and difficulty-based loss weights.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationLayer, Corpus, LabelType};
use crate::difficulty_model::{predict_difficulty, train_regressor, EmbeddingTable, RegressorConfig};
use crate::error::{Error, Result};
use crate::scoring::{sentence_agreement, DifficultyRecord};
use crate::tagger::WeightedExample;

/// How `tau` is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `tau` is a difficulty score.
    #[default]
    Score,
    /// `tau` is a quantile level: the threshold is the `tau`-quantile of the
    /// scores being weighted, so 0.8 down-weights the top 20%.
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReweightConfig {
    pub tau: f64,
    /// Weight floor is `1 - a`.
    pub a: f64,
    #[serde(default)]
    pub mode: ThresholdMode,
}

impl Default for ReweightConfig {
    fn default() -> Self {
        ReweightConfig { tau: 0.8, a: 0.5, mode: ThresholdMode::Score }
    }
}

impl ReweightConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::InvalidConfig(format!("a must lie in [0, 1], got {}", self.a)));
        }
        Ok(())
    }
}

/// `1` up to `tau`, then linear down to `1 - a` at `d = 1`.
pub fn reweight(d: f64, tau: f64, a: f64) -> f64 {
    if d <= tau {
        1.0
    } else {
        1.0 - a * (d - tau) / (1.0 - tau)
    }
}

/// Linear-interpolation quantile of unsorted values (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Loss weight per sentence id.
pub fn apply_reweighting(scores: &[DifficultyRecord], config: &ReweightConfig) -> Result<BTreeMap<String, f64>> {
    config.validate()?;
    if let Some(r) = scores.iter().find(|r| !(0.0..=1.0).contains(&r.score)) {
        return Err(Error::InvalidConfig(format!("score {} of {} outside [0, 1]", r.score, r.sent_id)));
    }
    let tau = match config.mode {
        ThresholdMode::Score => config.tau,
        ThresholdMode::Percentile => {
            let values: Vec<f64> = scores.iter().map(|r| r.score).collect();
            quantile(&values, config.tau).unwrap_or(config.tau)
        }
    };
    Ok(scores
        .iter()
        .map(|r| {
            // A threshold of 1 leaves nothing above it.
            let w = if tau >= 1.0 { 1.0 } else { reweight(r.score, tau, config.a) };
            (r.sent_id.clone(), w)
        })
        .collect())
}

/// Sets each example's weight from `weights`.
pub fn apply_weights(examples: &mut [WeightedExample], weights: &BTreeMap<String, f64>) -> Result<()> {
    for ex in examples {
        ex.weight =
            *weights.get(&ex.sentence.sent_id).ok_or_else(|| Error::MissingScore(ex.sentence.sent_id.clone()))?;
    }
    Ok(())
}

/// `ceil(fraction * n)`, forgiving float error just above an integer.
pub fn removal_count(fraction: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("fraction must lie in [0, 1], got {fraction}")));
    }
    Ok(((fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n))
}

/// Drops the `ceil(fraction * n)` highest-scored examples. Equal scores are
/// removed in ascending sentence-id order. Survivors keep their order.
pub fn apply_removal(
    examples: Vec<WeightedExample>,
    scores: &[DifficultyRecord],
    fraction: f64,
) -> Result<Vec<WeightedExample>> {
    let count = removal_count(fraction, examples.len())?;
    let by_id: HashMap<&str, f64> = scores.iter().map(|r| (r.sent_id.as_str(), r.score)).collect();
    let mut ranked: Vec<(f64, &str)> = examples
        .iter()
        .map(|ex| {
            let id = ex.sentence.sent_id.as_str();
            by_id.get(id).map(|&s| (s, id)).ok_or_else(|| Error::MissingScore(id.to_string()))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let removed: std::collections::HashSet<String> = ranked[..count].iter().map(|(_, id)| id.to_string()).collect();
    Ok(examples.into_iter().filter(|ex| !removed.contains(&ex.sentence.sent_id)).collect())
}

/// Drops `ceil(fraction * n)` examples chosen uniformly at random.
pub fn apply_random_removal(examples: Vec<WeightedExample>, fraction: f64, seed: u64) -> Result<Vec<WeightedExample>> {
    let count = removal_count(fraction, examples.len())?;
    let mut idx: Vec<usize> = (0..examples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut keep = vec![true; examples.len()];
    for &i in &idx[..count] {
        keep[i] = false;
    }
    Ok(examples.into_iter().zip(keep).filter_map(|(ex, k)| k.then_some(ex)).collect())
}

/// Per-sentence disagreement `(1 - mean pairwise crowd correlation) / 2`.
/// Sentences seen by fewer than two crowd layers get no record.
pub fn disagreement_targets(
    corpus: &Corpus,
    crowd: &[AnnotationLayer],
    label_type: LabelType,
) -> Result<Vec<DifficultyRecord>> {
    let crowd: Vec<&AnnotationLayer> = crowd.iter().filter(|l| l.label_type == label_type).collect();
    if crowd.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: crowd.len() });
    }
    let mut out = Vec::new();
    for s in corpus.sentences() {
        if let Some(rho) = sentence_agreement(s, &crowd)? {
            out.push(DifficultyRecord {
                sent_id: s.sent_id.clone(),
                label_type,
                score: ((1.0 - rho) / 2.0).clamp(0.0, 1.0),
                source: crate::scoring::Source::Reference,
            });
        }
    }
    Ok(out)
}

/// Loss weights from a regressor trained to predict crowd disagreement.
pub fn agreement_weighting(
    corpus: &Corpus,
    crowd: &[AnnotationLayer],
    label_type: LabelType,
    regressor: &RegressorConfig,
    reweight: &ReweightConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<BTreeMap<String, f64>> {
    let targets = disagreement_targets(corpus, crowd, label_type)?;
    let texts: Vec<Vec<&str>> =
        targets.iter().map(|r| corpus.sentence(&r.sent_id).expect("target from corpus").words().collect()).collect();
    let y: Vec<f64> = targets.iter().map(|r| r.score).collect();
    let model = train_regressor(&texts, &y, label_type, regressor, embeddings)?;
    let predicted = predict_difficulty(&model, corpus, label_type, embeddings)?;
    apply_reweighting(&predicted, reweight)
}
