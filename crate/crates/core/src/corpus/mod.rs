//! Tokenized documents, annotation layers and token count vectors.

mod io;
pub mod synthetic;
pub mod text;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_annotations, load_corpus, load_corpus_file, parse_annotations, parse_corpus, read_jsonl_records,
    write_annotations, write_corpus, LoadReport,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticCorpus};

/// Schema version written into and required from every input file.
pub const SCHEMA_VERSION: &str = "1";

/// A token with its character offsets in the document text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    /// Builds a document from raw text with the rule-based splitter and
    /// tokenizer. Sentence ids are `<doc_id>.<n>` where `n` counts every
    /// split sentence, including the ones dropped for having fewer than two
    /// tokens. Returns the document and the number of dropped sentences.
    pub fn from_text(doc_id: &str, text: &str) -> (Document, usize) {
        let mut sentences = Vec::new();
        let mut dropped = 0;
        for (n, (start, end)) in text::split_sentences(text).into_iter().enumerate() {
            let tokens: Vec<Token> = text::tokenize(text, start, end)
                .into_iter()
                .map(|(s, e)| Token { text: text::char_slice(text, s, e), start: s, end: e })
                .collect();
            if tokens.len() < 2 {
                dropped += 1;
                continue;
            }
            sentences.push(Sentence {
                sent_id: format!("{doc_id}.{n}"),
                doc_id: doc_id.to_string(),
                start,
                end,
                tokens,
            });
        }
        (Document { doc_id: doc_id.to_string(), text: text.to_string(), sentences }, dropped)
    }

    /// Checks offsets and ordering of sentences and tokens.
    pub fn validate(&self) -> Result<()> {
        let text_len = self.text.chars().count();
        let mut prev_end = 0;
        for sent in &self.sentences {
            let bad = |msg: &str| Error::InvalidCorpus(format!("sentence {}: {msg}", sent.sent_id));
            if sent.doc_id != self.doc_id {
                return Err(bad("doc_id does not match its document"));
            }
            if sent.start >= sent.end || sent.end > text_len || sent.start < prev_end {
                return Err(bad("sentence span out of order or out of bounds"));
            }
            prev_end = sent.end;
            if sent.tokens.len() < 2 {
                return Err(bad("fewer than two tokens"));
            }
            let mut tok_end = sent.start;
            for tok in &sent.tokens {
                if tok.start >= tok.end || tok.start < tok_end || tok.end > sent.end {
                    return Err(bad("token offsets overlap or leave the sentence span"));
                }
                tok_end = tok.end;
            }
        }
        Ok(())
    }
}

/// An immutable collection of documents with a sentence index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    index: HashMap<String, (usize, usize)>,
}

impl Corpus {
    /// Validates offsets, ordering and id uniqueness. Every sentence must
    /// already have at least two tokens.
    pub fn new(documents: Vec<Document>) -> Result<Corpus> {
        let mut index = HashMap::new();
        let mut doc_ids = BTreeSet::new();
        for (d, doc) in documents.iter().enumerate() {
            if !doc_ids.insert(doc.doc_id.as_str()) {
                return Err(Error::InvalidCorpus(format!("duplicate doc_id {}", doc.doc_id)));
            }
            doc.validate()?;
            for (s, sent) in doc.sentences.iter().enumerate() {
                if index.insert(sent.sent_id.clone(), (d, s)).is_some() {
                    return Err(Error::InvalidCorpus(format!("duplicate sent_id {}", sent.sent_id)));
                }
            }
        }
        Ok(Corpus { documents, index })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn num_sentences(&self) -> usize {
        self.index.len()
    }

    pub fn sentence(&self, sent_id: &str) -> Option<&Sentence> {
        self.index.get(sent_id).map(|&(d, s)| &self.documents[d].sentences[s])
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.doc_id.as_str())
    }

    /// Keeps only the listed documents, in corpus order.
    pub fn subset(&self, doc_ids: &BTreeSet<String>) -> Corpus {
        let docs = self.documents.iter().filter(|d| doc_ids.contains(&d.doc_id)).cloned().collect();
        Corpus::new(docs).expect("subset of a valid corpus is valid")
    }
}

/// The three annotated element types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelType {
    P,
    I,
    O,
}

impl LabelType {
    pub const ALL: [LabelType; 3] = [LabelType::P, LabelType::I, LabelType::O];
}

impl fmt::Display for LabelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelType::P => "P",
            LabelType::I => "I",
            LabelType::O => "O",
        })
    }
}

impl FromStr for LabelType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(LabelType::P),
            "I" | "i" => Ok(LabelType::I),
            "O" | "o" => Ok(LabelType::O),
            other => Err(Error::InvalidConfig(format!("unknown label type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Crowd,
    Expert,
    Model,
}

/// A marked token range `[first, last)` inside one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub sent_id: String,
    pub first: usize,
    pub last: usize,
}

/// One annotator's span markings for one label type.
///
/// `coverage` lists the documents the annotator looked at; `None` means the
/// whole corpus. A document outside the coverage was not annotated at all,
/// which is different from being annotated with no spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationLayer {
    pub annotator_id: String,
    pub group: Group,
    pub label_type: LabelType,
    pub spans: BTreeSet<Span>,
    pub coverage: Option<BTreeSet<String>>,
}

impl AnnotationLayer {
    pub fn new(annotator_id: impl Into<String>, group: Group, label_type: LabelType) -> Self {
        AnnotationLayer { annotator_id: annotator_id.into(), group, label_type, spans: BTreeSet::new(), coverage: None }
    }

    pub fn covers(&self, doc_id: &str) -> bool {
        self.coverage.as_ref().is_none_or(|c| c.contains(doc_id))
    }

    pub fn spans_in<'a>(&'a self, sent_id: &'a str) -> impl Iterator<Item = &'a Span> + 'a {
        let lo = Span { sent_id: sent_id.to_string(), first: 0, last: 0 };
        self.spans.range(lo..).take_while(move |s| s.sent_id == sent_id)
    }

    /// Adds a span, rejecting ones that overlap an existing span in the same sentence.
    pub fn add_span(&mut self, sent_id: &str, first: usize, last: usize) -> Result<()> {
        if first >= last {
            return Err(Error::SpanOutOfBounds {
                sent_id: sent_id.to_string(),
                message: format!("empty span [{first}, {last})"),
            });
        }
        if self.spans_in(sent_id).any(|s| s.first < last && first < s.last) {
            return Err(Error::SpanOutOfBounds {
                sent_id: sent_id.to_string(),
                message: format!("span [{first}, {last}) overlaps another span of {}", self.annotator_id),
            });
        }
        self.spans.insert(Span { sent_id: sent_id.to_string(), first, last });
        Ok(())
    }

    /// Per-token 0/1 marks for one sentence.
    pub fn marks(&self, sentence: &Sentence) -> Vec<bool> {
        let mut marks = vec![false; sentence.len()];
        for span in self.spans_in(&sentence.sent_id) {
            for m in &mut marks[span.first..span.last.min(sentence.len())] {
                *m = true;
            }
        }
        marks
    }

    /// Replaces all spans of a sentence with the maximal runs of `marks`.
    pub fn set_marks(&mut self, sent_id: &str, marks: &[bool]) {
        self.spans.retain(|s| s.sent_id != sent_id);
        for (first, last) in runs(marks) {
            self.spans.insert(Span { sent_id: sent_id.to_string(), first, last });
        }
    }
}

/// Maximal runs of `true` as `[first, last)` pairs.
pub fn runs(marks: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &m) in marks.iter().enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, marks.len()));
    }
    out
}

/// Number of layers whose spans cover each token of `sentence`.
pub fn token_count_vector<'a, I>(sentence: &Sentence, layers: I) -> Result<Vec<u32>>
where
    I: IntoIterator<Item = &'a AnnotationLayer>,
{
    let mut counts = vec![0u32; sentence.len()];
    let mut label: Option<LabelType> = None;
    for layer in layers {
        match label {
            None => label = Some(layer.label_type),
            Some(expected) if expected != layer.label_type => {
                return Err(Error::LabelMismatch { expected, found: layer.label_type });
            }
            _ => {}
        }
        for span in layer.spans_in(&sentence.sent_id) {
            for c in &mut counts[span.first..span.last.min(sentence.len())] {
                *c += 1;
            }
        }
    }
    Ok(counts)
}

/// Layers of the given label type.
pub fn select(layers: &[AnnotationLayer], label_type: LabelType) -> Vec<&AnnotationLayer> {
    layers.iter().filter(|l| l.label_type == label_type).collect()
}
