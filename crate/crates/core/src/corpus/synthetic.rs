//! Synthetic corpora with planted difficulty.
//!
//! Each sentence is a run of filler words with optional entity spans (one
//! chance per label type), each usually preceded by a cue word. Sentences
//! flagged as difficult draw half of their filler from a separate jargon
//! vocabulary, so difficulty is visible in the text, and their crowd
//! annotations are corrupted at `hard_noise_rate` instead of
//! `easy_noise_rate`.
//!
//! Corruption works per gold span: the generator draws one confusion event
//! for the span (delete, shift left, shift right, extend by one token) and
//! every annotator independently falls for it with probability equal to its
//! noise rate. Each sentence also has one distractor span of 1-3 tokens that
//! annotators mark with probability `rate / 4`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotationLayer, Corpus, Document, Group, LabelType};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub num_docs: usize,
    pub sentences_per_doc: usize,
    pub vocab_size: usize,
    /// Probability that a sentence carries a span of a given label type.
    pub gold_span_rate: f64,
    pub difficult_fraction: f64,
    pub crowd_workers_per_sentence: usize,
    pub easy_noise_rate: f64,
    pub hard_noise_rate: f64,
    pub expert_noise_rate: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// 200 documents, 20% difficult sentences, crowd noise 0.05 / 0.6, expert noise 0.02.
    pub fn small(seed: u64) -> Self {
        SyntheticConfig {
            num_docs: 200,
            sentences_per_doc: 6,
            vocab_size: 400,
            gold_span_rate: 0.5,
            difficult_fraction: 0.2,
            crowd_workers_per_sentence: 3,
            easy_noise_rate: 0.05,
            hard_noise_rate: 0.6,
            expert_noise_rate: 0.02,
            seed,
        }
    }

    pub fn medium(seed: u64) -> Self {
        SyntheticConfig { num_docs: 1000, sentences_per_doc: 8, vocab_size: 1500, ..Self::small(seed) }
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "small" => Ok(Self::small(seed)),
            "medium" => Ok(Self::medium(seed)),
            other => Err(Error::InvalidConfig(format!("unknown preset {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.vocab_size < 10 {
            return bad(format!("vocab_size must be at least 10, got {}", self.vocab_size));
        }
        if self.num_docs == 0 || self.sentences_per_doc == 0 || self.crowd_workers_per_sentence == 0 {
            return bad("num_docs, sentences_per_doc and crowd_workers_per_sentence must be positive".into());
        }
        for (name, v) in [
            ("gold_span_rate", self.gold_span_rate),
            ("difficult_fraction", self.difficult_fraction),
            ("easy_noise_rate", self.easy_noise_rate),
            ("hard_noise_rate", self.hard_noise_rate),
            ("expert_noise_rate", self.expert_noise_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.hard_noise_rate < self.easy_noise_rate {
            return bad("hard_noise_rate must be at least easy_noise_rate".into());
        }
        Ok(())
    }
}

/// Everything produced by [`generate_synthetic`].
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// One noise-free layer per label type (`gold-P`, `gold-I`, `gold-O`).
    pub gold: Vec<AnnotationLayer>,
    /// `crowd_workers_per_sentence` layers per label type.
    pub crowd: Vec<AnnotationLayer>,
    /// One expert layer per label type.
    pub expert: Vec<AnnotationLayer>,
    /// Planted difficulty flag per sentence, in corpus order.
    pub flags: Vec<(String, bool)>,
}

impl SyntheticCorpus {
    pub fn gold_layer(&self, label_type: LabelType) -> &AnnotationLayer {
        self.gold.iter().find(|l| l.label_type == label_type).expect("one gold layer per label type")
    }

    pub fn difficult_ids(&self) -> BTreeSet<String> {
        self.flags.iter().filter(|(_, f)| *f).map(|(id, _)| id.clone()).collect()
    }
}

struct Vocab {
    entities: [Vec<String>; 3],
    cues: [Vec<String>; 3],
    jargon: Vec<String>,
    filler: Vec<String>,
}

impl Vocab {
    fn new(size: usize, rng: &mut ChaCha8Rng) -> Vocab {
        const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
        const NUCLEI: &[&str] = &["a", "e", "i", "o", "u"];
        let mut seen = BTreeSet::new();
        let mut words = Vec::with_capacity(size);
        while words.len() < size {
            let syllables = rng.gen_range(2..=4);
            let w: String = (0..syllables)
                .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), NUCLEI.choose(rng).unwrap()))
                .collect();
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        let n_ent = (size / 10).max(1);
        let n_cue = (size / 50).max(1);
        let n_jargon = (size / 5).max(1);
        let mut it = words.into_iter();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<_>>();
        let entities = [take(n_ent), take(n_ent), take(n_ent)];
        let cues = [take(n_cue), take(n_cue), take(n_cue)];
        let jargon = take(n_jargon);
        let filler = take(usize::MAX);
        Vocab { entities, cues, jargon, filler }
    }
}

#[derive(Clone, Copy)]
enum Confusion {
    Delete,
    ShiftLeft,
    ShiftRight,
    ExtendLeft,
    ExtendRight,
}

struct PlannedSpan {
    first: usize,
    last: usize,
    confusion: Confusion,
}

/// Gold spans and the shared distractor for one sentence and label type.
struct SentencePlan {
    spans: Vec<PlannedSpan>,
    distractor: (usize, usize),
}

fn corrupt(plan: &SentencePlan, len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let mut marks = vec![false; len];
    for span in &plan.spans {
        let (mut first, mut last) = (span.first, span.last);
        if rng.gen_bool(rate) {
            match span.confusion {
                Confusion::Delete => continue,
                Confusion::ShiftLeft if first > 0 => (first, last) = (first - 1, last - 1),
                Confusion::ShiftRight if last < len => (first, last) = (first + 1, last + 1),
                Confusion::ExtendLeft if first > 0 => first -= 1,
                Confusion::ExtendRight if last < len => last += 1,
                _ => {}
            }
        }
        marks[first..last].iter_mut().for_each(|m| *m = true);
    }
    if rng.gen_bool(rate / 4.0) {
        let (first, last) = plan.distractor;
        marks[first..last].iter_mut().for_each(|m| *m = true);
    }
    marks
}

/// Generates a corpus with gold, crowd and expert layers. The output is a
/// pure function of `config`.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = Vocab::new(config.vocab_size, &mut rng);

    let total = config.num_docs * config.sentences_per_doc;
    let n_difficult = ((config.difficult_fraction * total as f64).round() as usize).min(total);
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let mut difficult = vec![false; total];
    for &i in &order[..n_difficult] {
        difficult[i] = true;
    }

    let workers = config.crowd_workers_per_sentence;
    let mut gold: Vec<AnnotationLayer> =
        LabelType::ALL.iter().map(|&lt| AnnotationLayer::new(format!("gold-{lt}"), Group::Expert, lt)).collect();
    let mut expert: Vec<AnnotationLayer> =
        LabelType::ALL.iter().map(|&lt| AnnotationLayer::new(format!("expert-{lt}"), Group::Expert, lt)).collect();
    let mut crowd: Vec<AnnotationLayer> = LabelType::ALL
        .iter()
        .flat_map(|&lt| (0..workers).map(move |j| AnnotationLayer::new(format!("crowd-{j}-{lt}"), Group::Crowd, lt)))
        .collect();

    let mut documents = Vec::with_capacity(config.num_docs);
    let mut flags = Vec::with_capacity(total);
    for d in 0..config.num_docs {
        let doc_id = format!("doc{d:04}");
        let mut sentence_texts = Vec::with_capacity(config.sentences_per_doc);
        let mut plans: Vec<[SentencePlan; 3]> = Vec::with_capacity(config.sentences_per_doc);
        for s in 0..config.sentences_per_doc {
            let hard = difficult[d * config.sentences_per_doc + s];
            let (words, plan) = sentence(&vocab, config.gold_span_rate, hard, &mut rng);
            sentence_texts.push(words);
            plans.push(plan);
        }
        let text = sentence_texts.join(" ");
        let (doc, dropped) = Document::from_text(&doc_id, &text);
        debug_assert_eq!(dropped, 0);
        if doc.sentences.len() != config.sentences_per_doc {
            return Err(Error::InvalidCorpus(format!("{doc_id}: generated text did not split as planned")));
        }
        for (s, (sent, plan)) in doc.sentences.iter().zip(&plans).enumerate() {
            let hard = difficult[d * config.sentences_per_doc + s];
            flags.push((sent.sent_id.clone(), hard));
            let len = sent.len();
            for (k, p) in plan.iter().enumerate() {
                let mut marks = vec![false; len];
                for span in &p.spans {
                    marks[span.first..span.last].iter_mut().for_each(|m| *m = true);
                }
                gold[k].set_marks(&sent.sent_id, &marks);
                let rate = if hard { config.hard_noise_rate } else { config.easy_noise_rate };
                for j in 0..workers {
                    let marks = corrupt(p, len, rate, &mut rng);
                    crowd[k * workers + j].set_marks(&sent.sent_id, &marks);
                }
                let marks = corrupt(p, len, config.expert_noise_rate, &mut rng);
                expert[k].set_marks(&sent.sent_id, &marks);
            }
        }
        documents.push(doc);
    }

    Ok(SyntheticCorpus { corpus: Corpus::new(documents)?, gold, crowd, expert, flags })
}

/// One sentence of text plus its span plans, indexed like `LabelType::ALL`.
fn sentence(vocab: &Vocab, span_rate: f64, hard: bool, rng: &mut ChaCha8Rng) -> (String, [SentencePlan; 3]) {
    let n_filler = rng.gen_range(6..=12);
    let filler_word = |rng: &mut ChaCha8Rng| -> String {
        if rng.gen_bool(0.05) {
            let k = rng.gen_range(0..3);
            return vocab.entities[k].choose(rng).unwrap().clone();
        }
        if hard && rng.gen_bool(0.5) {
            vocab.jargon.choose(rng).unwrap().clone()
        } else {
            vocab.filler.choose(rng).unwrap().clone()
        }
    };
    // (word, Some(k) if part of a span of label index k, start-of-span flag)
    let mut words: Vec<(String, Option<usize>)> = (0..n_filler).map(|_| (filler_word(rng), None)).collect();
    for k in 0..3 {
        if !rng.gen_bool(span_rate) {
            continue;
        }
        let mut chunk = Vec::new();
        if rng.gen_bool(0.8) {
            chunk.push((vocab.cues[k].choose(rng).unwrap().clone(), None));
        }
        for _ in 0..rng.gen_range(1..=3) {
            chunk.push((vocab.entities[k].choose(rng).unwrap().clone(), Some(k)));
        }
        // Insert between existing chunks so spans never interleave.
        let boundaries: Vec<usize> = (0..=words.len())
            .filter(|&i| i == 0 || i == words.len() || words[i - 1].1.is_none() || words[i].1.is_none())
            .collect();
        let at = *boundaries.choose(rng).unwrap();
        words.splice(at..at, chunk);
    }

    let len = words.len() + 1; // final period
    let mut plans: [SentencePlan; 3] = std::array::from_fn(|_| SentencePlan { spans: Vec::new(), distractor: (0, 1) });
    for (k, plan) in plans.iter_mut().enumerate() {
        let mut i = 0;
        while i < words.len() {
            if words[i].1 == Some(k) {
                let first = i;
                while i < words.len() && words[i].1 == Some(k) {
                    i += 1;
                }
                let confusion = match rng.gen_range(0..4) {
                    0 => Confusion::Delete,
                    1 => Confusion::ShiftLeft,
                    2 => Confusion::ShiftRight,
                    _ if rng.gen_bool(0.5) => Confusion::ExtendLeft,
                    _ => Confusion::ExtendRight,
                };
                plan.spans.push(PlannedSpan { first, last: i, confusion });
            } else {
                i += 1;
            }
        }
        let width = rng.gen_range(1..=3).min(len - 1);
        let first = rng.gen_range(0..len - width);
        plan.distractor = (first, first + width);
    }

    let mut text = String::new();
    for (i, (w, _)) in words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        if i == 0 {
            let mut c = w.chars();
            text.extend(c.next().map(|c| c.to_ascii_uppercase()));
            text.extend(c);
        } else {
            text.push_str(w);
        }
    }
    text.push('.');
    (text, plans)
}
