//! Weighted linear-chain CRF over BIO tags.
//!
//! Emissions are sums of hashed feature weights (see [`features`]); the
//! transition matrix is 3x3. Training minimizes
//! `sum_i w_i (log Z(x_i) - score(y_i, x_i)) + lambda |theta|^2`, where the
//! partition function ranges over all tag paths. Decoding forbids `I` after
//! `O` and at the start of a sentence.

mod crf;
mod crossfold;
pub mod features;
mod train;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use crossfold::{assign_folds, crossfold_predict};
pub use features::{extract_features, feature_id, TEMPLATE_VERSION};

use crate::corpus::{runs, AnnotationLayer, Corpus, Group, LabelType, Sentence, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crf::NUM_TAGS;
use train::{Dense, Encoded, FeatureIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    O,
    B,
    I,
}

impl Tag {
    /// Tags in tie-break order.
    pub const ALL: [Tag; 3] = [Tag::O, Tag::B, Tag::I];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }
}

/// BIO tags for per-token marks: each maximal marked run becomes `B I*`.
pub fn tags_from_marks(marks: &[bool]) -> Vec<Tag> {
    marks
        .iter()
        .enumerate()
        .map(|(t, &m)| match (m, t > 0 && marks[t - 1]) {
            (false, _) => Tag::O,
            (true, false) => Tag::B,
            (true, true) => Tag::I,
        })
        .collect()
}

pub fn marks_from_tags(tags: &[Tag]) -> Vec<bool> {
    tags.iter().map(|&t| t != Tag::O).collect()
}

/// Per-token majority vote over the layers covering the sentence's document.
/// A token is marked when more than half of those layers mark it.
pub fn majority_vote(sentence: &Sentence, layers: &[&AnnotationLayer]) -> Vec<bool> {
    let covering: Vec<&AnnotationLayer> = layers.iter().copied().filter(|l| l.covers(&sentence.doc_id)).collect();
    let mut counts = vec![0usize; sentence.len()];
    for layer in &covering {
        for (c, m) in counts.iter_mut().zip(layer.marks(sentence)) {
            *c += usize::from(m);
        }
    }
    counts.into_iter().map(|c| 2 * c > covering.len()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggerConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig { lambda: 1e-4, learning_rate: 0.1, epochs: 15, batch_size: 20, seed: 0 }
    }
}

/// A training sentence with gold tags and a loss weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedExample {
    pub sentence: Sentence,
    pub tags: Vec<Tag>,
    pub weight: f64,
}

impl WeightedExample {
    pub fn new(sentence: Sentence, tags: Vec<Tag>, weight: f64) -> Result<Self> {
        if tags.len() != sentence.len() {
            return Err(Error::LengthMismatch(tags.len(), sentence.len()));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidConfig(format!("example weight must be finite and >= 0, got {weight}")));
        }
        Ok(WeightedExample { sentence, tags, weight })
    }
}

/// Weight-1 examples whose tags come from a per-token majority vote over `layers`.
pub fn examples_from_layers(
    corpus: &Corpus,
    layers: &[AnnotationLayer],
    label_type: LabelType,
) -> Vec<WeightedExample> {
    let layers: Vec<&AnnotationLayer> = layers.iter().filter(|l| l.label_type == label_type).collect();
    corpus
        .sentences()
        .map(|s| WeightedExample {
            sentence: s.clone(),
            tags: tags_from_marks(&majority_vote(s, &layers)),
            weight: 1.0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub label_type: LabelType,
    /// Per-feature emission weights indexed by [`Tag::index`].
    pub emissions: HashMap<u64, [f64; NUM_TAGS]>,
    /// `transitions[from][to]`, indexed by [`Tag::index`].
    pub transitions: [[f64; NUM_TAGS]; NUM_TAGS],
    pub config: TaggerConfig,
}

/// Gradient with the same layout as [`TaggerModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub emissions: HashMap<u64, [f64; NUM_TAGS]>,
    pub transitions: [[f64; NUM_TAGS]; NUM_TAGS],
}

/// Column order used in model files.
const FILE_ORDER: [Tag; 3] = [Tag::B, Tag::I, Tag::O];

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: String,
    kind: String,
    label_type: LabelType,
    template_version: u32,
    /// feature id -> [wB, wI, wO]
    emissions: BTreeMap<String, [f64; 3]>,
    /// rows and columns in B, I, O order
    transitions: [[f64; 3]; 3],
    config: TaggerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plan: Option<Value>,
}

impl TaggerModel {
    pub fn zeros(label_type: LabelType, config: TaggerConfig) -> Self {
        TaggerModel { label_type, emissions: HashMap::new(), transitions: [[0.0; NUM_TAGS]; NUM_TAGS], config }
    }

    fn emission_scores(&self, sentence: &Sentence) -> Vec<[f64; NUM_TAGS]> {
        let words: Vec<&str> = sentence.words().collect();
        features::sentence_feature_ids(&words)
            .iter()
            .map(|ids| {
                let mut e = [0.0; NUM_TAGS];
                for w in ids.iter().filter_map(|id| self.emissions.get(id)) {
                    for y in 0..NUM_TAGS {
                        e[y] += w[y];
                    }
                }
                e
            })
            .collect()
    }

    /// Total score of a tag sequence (emissions plus transitions).
    pub fn score(&self, sentence: &Sentence, tags: &[Tag]) -> f64 {
        let idx: Vec<usize> = tags.iter().map(|t| t.index()).collect();
        crf::path_score(&self.emission_scores(sentence), &self.transitions, &idx)
    }

    /// Log partition function over every tag sequence of the sentence.
    pub fn log_partition(&self, sentence: &Sentence) -> f64 {
        crf::log_partition(&self.emission_scores(sentence), &self.transitions)
    }

    pub fn to_json(&self, plan: Option<&Value>) -> Result<String> {
        let reorder = |w: &[f64; 3]| FILE_ORDER.map(|t| w[t.index()]);
        let file = ModelFile {
            schema_version: SCHEMA_VERSION.into(),
            kind: "crf-tagger".into(),
            label_type: self.label_type,
            template_version: TEMPLATE_VERSION,
            emissions: self.emissions.iter().map(|(id, w)| (id.to_string(), reorder(w))).collect(),
            transitions: FILE_ORDER.map(|from| FILE_ORDER.map(|to| self.transitions[from.index()][to.index()])),
            config: self.config.clone(),
            plan: plan.cloned(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION || file.kind != "crf-tagger" {
            return Err(Error::InvalidConfig("not a version 1 CRF tagger model".into()));
        }
        if file.template_version != TEMPLATE_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported feature template version {}",
                file.template_version
            )));
        }
        let mut emissions = HashMap::with_capacity(file.emissions.len());
        for (id, w) in file.emissions {
            let id: u64 = id.parse().map_err(|_| Error::InvalidConfig(format!("bad feature id {id:?}")))?;
            let mut row = [0.0; NUM_TAGS];
            for (k, t) in FILE_ORDER.iter().enumerate() {
                row[t.index()] = w[k];
            }
            emissions.insert(id, row);
        }
        let mut transitions = [[0.0; NUM_TAGS]; NUM_TAGS];
        for (a, from) in FILE_ORDER.iter().enumerate() {
            for (b, to) in FILE_ORDER.iter().enumerate() {
                transitions[from.index()][to.index()] = file.transitions[a][b];
            }
        }
        let model = TaggerModel { label_type: file.label_type, emissions, transitions, config: file.config };
        if model.emissions.values().flatten().chain(model.transitions.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("model file".into()));
        }
        Ok(model)
    }

    /// Decodes every sentence of `corpus` into a model-group layer.
    pub fn predict_layer(&self, corpus: &Corpus, annotator_id: &str) -> AnnotationLayer {
        let mut layer = AnnotationLayer::new(annotator_id, Group::Model, self.label_type);
        for s in corpus.sentences() {
            let marks = marks_from_tags(&viterbi_decode(self, s));
            for (first, last) in runs(&marks) {
                layer.add_span(&s.sent_id, first, last).expect("runs never overlap");
            }
        }
        layer
    }
}

/// Most likely tag sequence subject to the BIO constraint.
pub fn viterbi_decode(model: &TaggerModel, sentence: &Sentence) -> Vec<Tag> {
    crf::viterbi(&model.emission_scores(sentence), &model.transitions).into_iter().map(Tag::from_index).collect()
}

fn encode(index: &mut FeatureIndex, ex: &WeightedExample, weighted: bool) -> Encoded {
    let words: Vec<&str> = ex.sentence.words().collect();
    let feats = features::sentence_feature_ids(&words)
        .into_iter()
        .map(|ids| ids.into_iter().map(|id| index.insert(id)).collect())
        .collect();
    Encoded { feats, tags: ex.tags.iter().map(|t| t.index()).collect(), weight: weighted.then_some(ex.weight) }
}

fn check_examples(batch: &[WeightedExample]) -> Result<()> {
    for ex in batch {
        if ex.tags.len() != ex.sentence.len() {
            return Err(Error::LengthMismatch(ex.tags.len(), ex.sentence.len()));
        }
        if !ex.weight.is_finite() || ex.weight < 0.0 {
            return Err(Error::InvalidConfig(format!("bad weight {} for {}", ex.weight, ex.sentence.sent_id)));
        }
    }
    Ok(())
}

/// Weighted negative log-likelihood of `batch` plus `lambda |theta|^2` and
/// its gradient with respect to every model weight and every feature the
/// batch activates.
pub fn loss_and_gradient(model: &TaggerModel, batch: &[WeightedExample]) -> Result<(f64, Gradient)> {
    check_examples(batch)?;
    let mut index = FeatureIndex::default();
    let mut ids: Vec<u64> = model.emissions.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        index.insert(id);
    }
    let encoded: Vec<Encoded> = batch.iter().map(|ex| encode(&mut index, ex, true)).collect();
    let mut params = Dense::zeros(index.len());
    for (row, id) in params.emit.iter_mut().zip(&index.ids) {
        if let Some(w) = model.emissions.get(id) {
            *row = *w;
        }
    }
    params.trans = model.transitions;
    let refs: Vec<&Encoded> = encoded.iter().collect();
    let (loss, grad) = train::objective(&params, &refs, model.config.lambda)?;
    let emissions = index.ids.iter().copied().zip(grad.emit).collect();
    Ok((loss, Gradient { emissions, transitions: grad.trans }))
}

/// Per-epoch objective values recorded during training.
pub type LossHistory = Vec<f64>;

fn train_impl(
    data: &[WeightedExample],
    label_type: LabelType,
    config: &TaggerConfig,
    weighted: bool,
) -> Result<(TaggerModel, LossHistory)> {
    check_examples(data)?;
    let mut index = FeatureIndex::default();
    let encoded: Vec<Encoded> = data.iter().map(|ex| encode(&mut index, ex, weighted)).collect();
    let (params, history) = train::fit(&encoded, index.len(), config)?;
    let emissions = index.ids.iter().copied().zip(params.emit).collect();
    Ok((TaggerModel { label_type, emissions, transitions: params.trans, config: config.clone() }, history))
}

/// Trains on the weighted objective.
pub fn train_crf(data: &[WeightedExample], label_type: LabelType, config: &TaggerConfig) -> Result<TaggerModel> {
    train_crf_with_history(data, label_type, config).map(|(m, _)| m)
}

pub fn train_crf_with_history(
    data: &[WeightedExample],
    label_type: LabelType,
    config: &TaggerConfig,
) -> Result<(TaggerModel, LossHistory)> {
    train_impl(data, label_type, config, true)
}

/// Trains on the plain (unweighted) likelihood, ignoring `weight` fields.
pub fn train_crf_unweighted(
    data: &[WeightedExample],
    label_type: LabelType,
    config: &TaggerConfig,
) -> Result<(TaggerModel, LossHistory)> {
    train_impl(data, label_type, config, false)
}
