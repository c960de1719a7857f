//! Choosing documents for expert re-annotation and merging the results.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::weighting::quantile;
use crate::corpus::{AnnotationLayer, Corpus};
use crate::error::{Error, Result};
use crate::scoring::DifficultyRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingStrategy {
    TopDifficulty,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingPlan {
    pub strategy: RoutingStrategy,
    pub budget: usize,
    pub seed: u64,
    /// In routing order: most difficult first for `top_difficulty`.
    pub routed: Vec<String>,
}

impl RoutingPlan {
    pub fn routed_set(&self) -> BTreeSet<String> {
        self.routed.iter().cloned().collect()
    }
}

/// Documents to send to experts.
///
/// `top_difficulty` calls a sentence difficult when its score is at or above
/// the `(100 - percentile)` quantile of all scores, then ranks documents by
/// their number of difficult sentences (ties by ascending doc id). `random`
/// samples documents uniformly without replacement. A budget larger than the
/// corpus routes every document.
pub fn route_top_difficulty(
    scores: &[DifficultyRecord],
    corpus: &Corpus,
    budget: usize,
    percentile: f64,
    strategy: RoutingStrategy,
    seed: u64,
) -> Result<RoutingPlan> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::InvalidConfig(format!("percentile must lie in (0, 100), got {percentile}")));
    }
    let n_docs = corpus.documents().len();
    if budget > n_docs {
        log::warn!("budget {budget} exceeds {n_docs} documents; routing all");
    }
    let take = budget.min(n_docs);
    let routed = match strategy {
        RoutingStrategy::Random => {
            let mut ids: Vec<&str> = corpus.doc_ids().collect();
            ids.sort_unstable();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            ids[..take].iter().map(|s| s.to_string()).collect()
        }
        RoutingStrategy::TopDifficulty => {
            let mut counts: BTreeMap<&str, usize> = corpus.doc_ids().map(|d| (d, 0)).collect();
            let values: Vec<f64> = scores.iter().map(|r| r.score).collect();
            if let Some(threshold) = quantile(&values, 1.0 - percentile / 100.0) {
                for r in scores.iter().filter(|r| r.score >= threshold) {
                    let s = corpus.sentence(&r.sent_id).ok_or_else(|| Error::UnknownSentence(r.sent_id.clone()))?;
                    *counts.get_mut(s.doc_id.as_str()).expect("doc of a corpus sentence") += 1;
                }
            }
            let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            ranked[..take].iter().map(|(d, _)| d.to_string()).collect()
        }
    };
    Ok(RoutingPlan { strategy, budget, seed, routed })
}

/// Restricts a layer to the documents in `allowed`. Returns the layer
/// untouched when nothing changes and `None` when nothing is left.
fn restrict(layer: &AnnotationLayer, allowed: &dyn Fn(&str) -> bool, corpus: &Corpus) -> Option<AnnotationLayer> {
    let current: BTreeSet<String> = match &layer.coverage {
        Some(c) => c.clone(),
        None => corpus.doc_ids().map(String::from).collect(),
    };
    let kept: BTreeSet<String> = current.iter().filter(|d| allowed(d)).cloned().collect();
    if kept.is_empty() {
        return None;
    }
    if kept.len() == current.len() {
        return Some(layer.clone());
    }
    let mut out = layer.clone();
    out.spans.retain(|s| corpus.sentence(&s.sent_id).is_some_and(|sent| kept.contains(&sent.doc_id)));
    out.coverage = Some(kept);
    Some(out)
}

/// Replaces crowd annotation with expert annotation on the routed documents.
///
/// Crowd layers lose the routed documents from their coverage; expert
/// layers are limited to them. Every routed document must be covered by an
/// expert layer of each label type present in `crowd`.
pub fn merge_expert(
    crowd: &[AnnotationLayer],
    expert: &[AnnotationLayer],
    routed: &BTreeSet<String>,
    corpus: &Corpus,
) -> Result<Vec<AnnotationLayer>> {
    let label_types: BTreeSet<_> = crowd.iter().map(|l| l.label_type).collect();
    let missing: Vec<String> = routed
        .iter()
        .filter(|d| label_types.iter().any(|&lt| !expert.iter().any(|e| e.label_type == lt && e.covers(d))))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingExpert(missing));
    }
    let mut out: Vec<AnnotationLayer> =
        crowd.iter().filter_map(|l| restrict(l, &|d| !routed.contains(d), corpus)).collect();
    out.extend(expert.iter().filter_map(|l| restrict(l, &|d| routed.contains(d), corpus)));
    Ok(out)
}
