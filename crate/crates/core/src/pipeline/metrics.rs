//! Token-level precision/recall/F1 and the paired sign test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotationLayer, Corpus, Sentence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    tp: usize,
    predicted: usize,
    gold: usize,
}

impl Counts {
    fn add(&mut self, predicted: &AnnotationLayer, gold: &AnnotationLayer, sentence: &Sentence) {
        for (p, g) in predicted.marks(sentence).into_iter().zip(gold.marks(sentence)) {
            self.tp += usize::from(p && g);
            self.predicted += usize::from(p);
            self.gold += usize::from(g);
        }
    }

    fn prf(self) -> Prf {
        let both_empty = self.predicted == 0 && self.gold == 0;
        let ratio = |num: usize, den: usize| {
            if den > 0 {
                num as f64 / den as f64
            } else if both_empty {
                1.0
            } else {
                0.0
            }
        };
        let precision = ratio(self.tp, self.predicted);
        let recall = ratio(self.tp, self.gold);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Prf { precision, recall, f1 }
    }
}

/// Token-level scores of `predicted` against `gold` over every corpus token.
/// A `0/0` ratio counts as 1 when both layers are empty and 0 otherwise.
pub fn token_prf(predicted: &AnnotationLayer, gold: &AnnotationLayer, corpus: &Corpus) -> Prf {
    let mut c = Counts::default();
    for s in corpus.sentences() {
        c.add(predicted, gold, s);
    }
    c.prf()
}

/// [`token_prf`] F1 for each document, keyed by doc id.
pub fn per_document_f1(predicted: &AnnotationLayer, gold: &AnnotationLayer, corpus: &Corpus) -> BTreeMap<String, f64> {
    corpus
        .documents()
        .iter()
        .map(|d| {
            let mut c = Counts::default();
            for s in &d.sentences {
                c.add(predicted, gold, s);
            }
            (d.doc_id.clone(), c.prf().f1)
        })
        .collect()
}

/// Two-sided exact sign test on paired scores. Tied pairs are dropped.
pub fn sign_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let wins = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x < y).count();
    sign_test_counts(wins, losses)
}

/// `min(1, 2 * P(X <= min(wins, losses)))` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_counts(wins: usize, losses: usize) -> Result<f64> {
    let n = wins + losses;
    if n == 0 {
        return Err(Error::NoInformativePairs);
    }
    let k = wins.min(losses);
    let tail = if n <= 120 {
        // Exact integer arithmetic while C(n, k) fits.
        let mut c: u128 = 1;
        let mut sum: u128 = 1;
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
            sum += c;
        }
        sum as f64 / 2f64.powi(n as i32)
    } else {
        let ln2 = std::f64::consts::LN_2;
        let mut ln_c = 0.0;
        let mut sum = (-(n as f64) * ln2).exp();
        for i in 0..k {
            ln_c += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
            sum += (ln_c - n as f64 * ln2).exp();
        }
        sum
    };
    Ok((2.0 * tail).min(1.0))
}
