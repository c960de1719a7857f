//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use annodiff::corpus::{Corpus, Document, LabelType, Sentence};
use annodiff::tagger::{features::sentence_feature_ids, Tag, TaggerConfig, TaggerModel, WeightedExample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rank of each value: 1 + number of smaller values + half the other equal ones.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Exact two-sided sign-test p-value from binomial coefficients.
pub fn oracle_sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    let choose = |k: u64| -> f64 { (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64) };
    let tail: f64 = (0..=wins.min(losses)).map(choose).sum();
    (2.0 * tail / 2f64.powi(n as i32)).min(1.0)
}

/// A one-document corpus holding a single sentence.
pub fn sentence(text: &str) -> Sentence {
    let (doc, _) = Document::from_text("d", text);
    doc.sentences.into_iter().next().expect("at least one sentence")
}

pub fn corpus_of(docs: &[(&str, &str)]) -> Corpus {
    Corpus::new(docs.iter().map(|(id, text)| Document::from_text(id, text).0).collect()).unwrap()
}

const WORDS: [&str; 8] = ["alpha", "Beta", "gamma", "42", "delta", "omega", "Zeta", "eta"];

/// A random sentence of `len >= 2` tokens from a small vocabulary.
pub fn random_sentence(rng: &mut ChaCha8Rng, len: usize) -> Sentence {
    let words: Vec<&str> = (0..len).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
    let s = sentence(&words.join(" "));
    assert_eq!(s.len(), len);
    s
}

/// A model with random weights on every feature the sentences activate.
pub fn random_model(rng: &mut ChaCha8Rng, sentences: &[&Sentence], lambda: f64) -> TaggerModel {
    let mut emissions = HashMap::new();
    for s in sentences {
        let words: Vec<&str> = s.words().collect();
        for id in sentence_feature_ids(&words).into_iter().flatten() {
            emissions.entry(id).or_insert_with(|| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
        }
    }
    let transitions = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    TaggerModel {
        label_type: LabelType::P,
        emissions,
        transitions,
        config: TaggerConfig { lambda, ..TaggerConfig::default() },
    }
}

/// Every tag sequence of length `n`, in lexicographic O < B < I order.
pub fn all_tag_paths(n: usize) -> Vec<Vec<Tag>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p| Tag::ALL.iter().map(move |&t| [p.clone(), vec![t]].concat())).collect();
    }
    out
}

pub fn is_valid_bio(tags: &[Tag]) -> bool {
    tags.iter().enumerate().all(|(i, &t)| t != Tag::I || (i > 0 && tags[i - 1] != Tag::O))
}

pub fn brute_log_partition(model: &TaggerModel, s: &Sentence) -> f64 {
    let scores: Vec<f64> = all_tag_paths(s.len()).iter().map(|p| model.score(s, p)).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Highest-scoring valid path; the first in enumeration order wins ties.
pub fn brute_viterbi(model: &TaggerModel, s: &Sentence) -> Vec<Tag> {
    let mut best: Option<(f64, Vec<Tag>)> = None;
    for p in all_tag_paths(s.len()).into_iter().filter(|p| is_valid_bio(p)) {
        let v = model.score(s, &p);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    best.expect("nonempty").1
}

pub fn random_example(rng: &mut ChaCha8Rng, max_len: usize) -> WeightedExample {
    let len = rng.gen_range(2..=max_len);
    let s = random_sentence(rng, len);
    let tags = (0..len).map(|_| Tag::ALL[rng.gen_range(0..3)]).collect();
    WeightedExample::new(s, tags, 1.0).unwrap()
}

/// Sentences whose target is exactly linear in unigram counts: each "hard"
/// word adds 0.1. Lengths vary from 5 to 9, so hashing everything into one
/// bucket (which sees only the length) cannot recover the target.
pub fn planted_linear(seed: u64, n: usize) -> (Vec<Vec<String>>, Vec<f64>) {
    let mut r = rng(seed);
    let hard: Vec<String> = (0..20).map(|i| format!("hard{i}")).collect();
    let easy: Vec<String> = (0..40).map(|i| format!("easy{i}")).collect();
    let mut texts = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..n {
        let len = r.gen_range(5..=9);
        let p: f64 = r.gen();
        let words: Vec<String> = (0..len)
            .map(|_| if r.gen_bool(p) { hard[r.gen_range(0..20)].clone() } else { easy[r.gen_range(0..40)].clone() })
            .collect();
        targets.push(words.iter().filter(|w| w.starts_with("hard")).count() as f64 * 0.1);
        texts.push(words);
    }
    (texts, targets)
}
