//! Out-of-fold predictions: every document is tagged by a model that never
//! saw it during training.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{examples_from_layers, train_crf, TaggerConfig};
use crate::corpus::{AnnotationLayer, Corpus, Group, LabelType};
use crate::error::{Error, Result};

/// Splits document ids into `k` folds: seeded shuffle, then round-robin.
pub fn assign_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<BTreeSet<String>>> {
    let n = corpus.documents().len();
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidConfig(format!("{k} folds requested for {n} documents")));
    }
    let mut ids: Vec<&str> = corpus.doc_ids().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![BTreeSet::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        folds[i % k].insert(id.to_string());
    }
    Ok(folds)
}

/// Trains one tagger per fold on the other folds (gold tags from a majority
/// vote over `crowd`) and returns the union of the held-out predictions as a
/// single model-group layer named `proxy-<label>`.
pub fn crossfold_predict(
    corpus: &Corpus,
    crowd: &[AnnotationLayer],
    label_type: LabelType,
    k: usize,
    seed: u64,
    config: &TaggerConfig,
) -> Result<AnnotationLayer> {
    let folds = assign_folds(corpus, k, seed)?;
    let all: BTreeSet<String> = corpus.doc_ids().map(String::from).collect();
    let predictions: Vec<AnnotationLayer> = folds
        .par_iter()
        .enumerate()
        .map(|(f, held_out)| {
            let train_ids: BTreeSet<String> = all.difference(held_out).cloned().collect();
            let train = corpus.subset(&train_ids);
            let examples = examples_from_layers(&train, crowd, label_type);
            let model = train_crf(&examples, label_type, config)?;
            log::info!("fold {}/{k}: trained on {} sentences", f + 1, examples.len());
            Ok(model.predict_layer(&corpus.subset(held_out), "fold"))
        })
        .collect::<Result<_>>()?;

    let mut merged = AnnotationLayer::new(format!("proxy-{label_type}"), Group::Model, label_type);
    for layer in predictions {
        merged.spans.extend(layer.spans);
    }
    Ok(merged)
}
