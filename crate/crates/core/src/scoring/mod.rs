//! Difficulty scores from crowd-vs-reference agreement, plus agreement statistics.
//!
//! For one sentence, every annotator layer reduces to a token count vector.
//! A crowd worker is scored by the Spearman correlation between its vector
//! and the reference vector, the correlations are averaged over workers, and
//! the mean `rho` maps to `(1 - rho) / 2` so that 0 is easy and 1 is
//! difficult. Sentences that nobody marked score 0; sentences marked only by
//! the reference side or only by the crowd side score 1.

mod correlation;
mod records;

use serde::{Deserialize, Serialize};

pub use correlation::{fractional_ranks, pearson, spearman};
pub use records::{read_records, write_records_csv, write_records_jsonl, DifficultyRecord, Source};

use crate::corpus::{token_count_vector, AnnotationLayer, Corpus, Group, LabelType, Sentence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Average the per-worker correlations.
    #[default]
    PerWorkerMean,
    /// Correlate the summed crowd vector with the reference.
    Aggregate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub mode: ScoreMode,
}

fn is_constant(v: &[u32]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn is_zero(v: &[u32]) -> bool {
    v.iter().all(|&c| c == 0)
}

/// Spearman correlation between two count vectors, made total:
/// two constant vectors score 1 when both or neither are all-zero and 0
/// otherwise; a constant vector against a varying one scores 0.
pub fn pair_correlation(a: &[u32], b: &[u32]) -> f64 {
    match (is_constant(a), is_constant(b)) {
        (true, true) => {
            if is_zero(a) == is_zero(b) {
                1.0
            } else {
                0.0
            }
        }
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let x: Vec<f64> = a.iter().map(|&c| c as f64).collect();
            let y: Vec<f64> = b.iter().map(|&c| c as f64).collect();
            spearman(&x, &y).ok().flatten().unwrap_or(0.0)
        }
    }
}

fn check_label(layers: &[&AnnotationLayer], label_type: LabelType) -> Result<()> {
    match layers.iter().find(|l| l.label_type != label_type) {
        Some(l) => Err(Error::LabelMismatch { expected: label_type, found: l.label_type }),
        None => Ok(()),
    }
}

/// Difficulty of one sentence for `label_type`.
///
/// Only layers whose coverage includes the sentence's document take part.
/// The record's source is `proxy` when any reference layer belongs to the
/// model group and `reference` otherwise.
pub fn sentence_difficulty(
    sentence: &Sentence,
    reference: &[&AnnotationLayer],
    crowd: &[&AnnotationLayer],
    label_type: LabelType,
    config: ScoringConfig,
) -> Result<DifficultyRecord> {
    check_label(reference, label_type)?;
    check_label(crowd, label_type)?;
    let doc = sentence.doc_id.as_str();
    let reference: Vec<&AnnotationLayer> = reference.iter().copied().filter(|l| l.covers(doc)).collect();
    let crowd: Vec<&AnnotationLayer> = crowd.iter().copied().filter(|l| l.covers(doc)).collect();

    let y = token_count_vector(sentence, reference.iter().copied())?;
    let total = token_count_vector(sentence, crowd.iter().copied())?;
    let score = match (is_zero(&y), is_zero(&total)) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => {
            let rho = match config.mode {
                ScoreMode::Aggregate => pair_correlation(&total, &y),
                ScoreMode::PerWorkerMean => {
                    let mut sum = 0.0;
                    for layer in &crowd {
                        sum += pair_correlation(&token_count_vector(sentence, [*layer])?, &y);
                    }
                    sum / crowd.len() as f64
                }
            };
            ((1.0 - rho) / 2.0).clamp(0.0, 1.0)
        }
    };
    let source = if reference.iter().any(|l| l.group == Group::Model) { Source::Proxy } else { Source::Reference };
    Ok(DifficultyRecord { sent_id: sentence.sent_id.clone(), label_type, score, source })
}

/// [`sentence_difficulty`] for every sentence of the corpus, in corpus order.
/// Layers of other label types are ignored.
pub fn corpus_difficulty(
    corpus: &Corpus,
    reference: &[AnnotationLayer],
    crowd: &[AnnotationLayer],
    label_type: LabelType,
    config: ScoringConfig,
) -> Result<Vec<DifficultyRecord>> {
    let reference: Vec<&AnnotationLayer> = reference.iter().filter(|l| l.label_type == label_type).collect();
    let crowd: Vec<&AnnotationLayer> = crowd.iter().filter(|l| l.label_type == label_type).collect();
    corpus.sentences().map(|s| sentence_difficulty(s, &reference, &crowd, label_type, config)).collect()
}

/// Mean pairwise [`pair_correlation`] among the layers covering the
/// sentence, or `None` with fewer than two such layers.
pub fn sentence_agreement(sentence: &Sentence, layers: &[&AnnotationLayer]) -> Result<Option<f64>> {
    let vectors = layers
        .iter()
        .filter(|l| l.covers(&sentence.doc_id))
        .map(|l| token_count_vector(sentence, [*l]))
        .collect::<Result<Vec<_>>>()?;
    if vectors.len() < 2 {
        return Ok(None);
    }
    let (mut sum, mut pairs) = (0.0, 0usize);
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            sum += pair_correlation(&vectors[i], &vectors[j]);
            pairs += 1;
        }
    }
    Ok(Some(sum / pairs as f64))
}

/// Average inter-annotator agreement: the mean Spearman correlation over all
/// annotator pairs and all sentences on which the pair's correlation is
/// defined (both vectors vary). Pairs only meet on documents both cover.
pub fn inter_annotator_agreement(corpus: &Corpus, layers: &[AnnotationLayer], label_type: LabelType) -> Result<f64> {
    let layers: Vec<&AnnotationLayer> = layers.iter().filter(|l| l.label_type == label_type).collect();
    if layers.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: layers.len() });
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for sentence in corpus.sentences() {
        let vectors: Vec<Option<Vec<f64>>> = layers
            .iter()
            .map(|l| {
                l.covers(&sentence.doc_id).then(|| {
                    let v = token_count_vector(sentence, [*l]).expect("single layer");
                    v.into_iter().map(f64::from).collect()
                })
            })
            .collect();
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                if let (Some(a), Some(b)) = (&vectors[i], &vectors[j]) {
                    if let Some(r) = spearman(a, b)? {
                        sum += r;
                        count += 1;
                    }
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Undefined("no sentence with a defined annotator-pair correlation".into()));
    }
    Ok(sum / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus() -> Corpus {
        let (doc, _) = Document::from_text("d", "Alpha beta gamma delta. Eps zeta eta.");
        Corpus::new(vec![doc]).unwrap()
    }

    fn layer(id: &str, group: Group, spans: &[(&str, usize, usize)]) -> AnnotationLayer {
        let mut l = AnnotationLayer::new(id, group, LabelType::I);
        for &(s, f, e) in spans {
            l.add_span(s, f, e).unwrap();
        }
        l
    }

    /// A layer whose count vector on `d.0` equals `counts` (one layer per count level).
    fn layers_for(prefix: &str, counts: &[u32]) -> Vec<AnnotationLayer> {
        let max = counts.iter().copied().max().unwrap_or(0);
        (1..=max)
            .map(|level| {
                let marks: Vec<bool> = counts.iter().map(|&c| c >= level).collect();
                let mut l = AnnotationLayer::new(format!("{prefix}{level}"), Group::Crowd, LabelType::I);
                l.set_marks("d.0", &marks);
                l
            })
            .collect()
    }

    fn score(reference: &[AnnotationLayer], crowd: &[AnnotationLayer]) -> f64 {
        let c = corpus();
        let s = c.sentence("d.0").unwrap();
        let r: Vec<_> = reference.iter().collect();
        let w: Vec<_> = crowd.iter().collect();
        sentence_difficulty(s, &r, &w, LabelType::I, ScoringConfig::default()).unwrap().score
    }

    #[test]
    fn no_labels_is_easy() {
        let r = layer("e", Group::Expert, &[]);
        let w = layer("w", Group::Crowd, &[]);
        assert_eq!(score(&[r], &[w]), 0.0);
    }

    #[test]
    fn one_sided_labels_are_difficult() {
        let r = layer("e", Group::Expert, &[("d.0", 1, 3)]);
        let w = layer("w", Group::Crowd, &[]);
        assert_eq!(score(std::slice::from_ref(&r), &[w.clone(), w.clone()]), 1.0);
        assert_eq!(score(&[w], &[r]), 1.0);
    }

    #[test]
    fn perfect_copy_and_reversal() {
        let r = layer("e", Group::Expert, &[("d.0", 1, 3)]);
        assert_eq!(score(std::slice::from_ref(&r), std::slice::from_ref(&r)), 0.0);

        // Reference [0,1,2,..] against a worker with the reversed order.
        // Sentence d.0 has 5 tokens: Alpha beta gamma delta .
        let reference = layers_for("e", &[0, 1, 2, 3, 4]);
        let crowd = layers_for("w", &[4, 3, 2, 1, 0]);
        let total: Vec<&AnnotationLayer> = crowd.iter().collect();
        let c = corpus();
        let s = c.sentence("d.0").unwrap();
        assert_eq!(token_count_vector(s, total).unwrap(), vec![4, 3, 2, 1, 0]);
        let cfg = ScoringConfig { mode: ScoreMode::Aggregate };
        let r: Vec<_> = reference.iter().collect();
        let w: Vec<_> = crowd.iter().collect();
        assert_eq!(sentence_difficulty(s, &r, &w, LabelType::I, cfg).unwrap().score, 1.0);
    }

    #[test]
    fn single_worker_reversal_maps_to_max() {
        assert_eq!(pair_correlation(&[2, 1, 0], &[0, 1, 2]), -1.0);
        assert_eq!(pair_correlation(&[0, 1, 1, 0], &[0, 1, 1, 0]), 1.0);
    }

    #[test]
    fn degenerate_pairs() {
        assert_eq!(pair_correlation(&[0, 0, 0], &[0, 0, 0]), 1.0);
        assert_eq!(pair_correlation(&[1, 1, 1], &[2, 2, 2]), 1.0);
        assert_eq!(pair_correlation(&[0, 0, 0], &[1, 1, 1]), 0.0);
        assert_eq!(pair_correlation(&[0, 0, 0], &[0, 1, 0]), 0.0);
    }

    #[test]
    fn label_mismatch_is_rejected() {
        let c = corpus();
        let s = c.sentence("d.0").unwrap();
        let r = layer("e", Group::Expert, &[]);
        let mut w = layer("w", Group::Crowd, &[]);
        w.label_type = LabelType::P;
        let err = sentence_difficulty(s, &[&r], &[&w], LabelType::I, ScoringConfig::default());
        assert!(matches!(err, Err(Error::LabelMismatch { .. })));
    }

    #[test]
    fn model_reference_marks_proxy_source() {
        let c = corpus();
        let s = c.sentence("d.0").unwrap();
        let r = layer("m", Group::Model, &[("d.0", 0, 1)]);
        let rec = sentence_difficulty(s, &[&r], &[&r], LabelType::I, ScoringConfig::default()).unwrap();
        assert_eq!(rec.source, Source::Proxy);
    }

    #[test]
    fn uncovered_workers_do_not_count() {
        let c = corpus();
        let s = c.sentence("d.0").unwrap();
        let r = layer("e", Group::Expert, &[("d.0", 1, 3)]);
        let good = r.clone();
        let mut absent = layer("w", Group::Crowd, &[]);
        absent.coverage = Some(Default::default());
        let rec = sentence_difficulty(s, &[&r], &[&good, &absent], LabelType::I, ScoringConfig::default()).unwrap();
        assert_eq!(rec.score, 0.0);
    }

    #[test]
    fn agreement_examples() {
        let c = corpus();
        let a = layer("a", Group::Crowd, &[("d.0", 1, 3), ("d.1", 0, 1)]);
        let b = AnnotationLayer { annotator_id: "b".into(), ..a.clone() };
        assert_eq!(inter_annotator_agreement(&c, &[a.clone(), b], LabelType::I).unwrap(), 1.0);

        // d.0 = [1,1,0,0,0] vs [0,0,1,1,1]; d.1 = [1,0,0,0] vs [0,1,1,1]
        let x = layer("x", Group::Crowd, &[("d.0", 0, 2), ("d.1", 0, 1)]);
        let y = layer("y", Group::Crowd, &[("d.0", 2, 5), ("d.1", 1, 4)]);
        assert_eq!(inter_annotator_agreement(&c, &[x, y], LabelType::I).unwrap(), -1.0);
        assert!(inter_annotator_agreement(&c, &[a], LabelType::I).is_err());
    }
}
