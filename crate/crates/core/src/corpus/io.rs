//! JSONL reading and writing for corpora and annotation layers.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AnnotationLayer, Corpus, Document, Group, LabelType, Sentence, Span, Token, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct TokenRecord {
    start: usize,
    end: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    sent_id: String,
    start: usize,
    end: usize,
    tokens: Vec<TokenRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    schema_version: String,
    doc_id: String,
    text: String,
    sentences: Vec<SentenceRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpanRecord {
    sent_id: String,
    first: usize,
    last: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    schema_version: String,
    annotator_id: String,
    group: Group,
    label_type: LabelType,
    spans: Vec<SpanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coverage: Option<Vec<String>>,
}

/// What was filtered out while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub dropped_sentences: usize,
    pub dropped_sentence_ids: BTreeSet<String>,
    pub discarded_spans: usize,
}

/// Parses a JSONL stream into records, skipping blank lines and header
/// lines (`"kind": "header"`). Every other line must carry
/// `"schema_version": "1"`. Returns 1-based line numbers with each record.
pub fn read_jsonl_records<T, R>(reader: R, path: &Path) -> Result<Vec<(usize, T)>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let malformed = |line: usize, message: String| Error::Malformed { path: path.to_path_buf(), line, message };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        if value.get("kind").and_then(Value::as_str) == Some("header") {
            continue;
        }
        match value.get("schema_version").and_then(Value::as_str) {
            Some(SCHEMA_VERSION) => {}
            Some(other) => return Err(malformed(line_no, format!("unsupported schema_version {other:?}"))),
            None => return Err(malformed(line_no, "missing schema_version".into())),
        }
        let record = serde_json::from_value(value).map_err(|e| malformed(line_no, e.to_string()))?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Parses a corpus stream. Sentences with fewer than two tokens are dropped
/// and recorded in the returned report.
pub fn parse_corpus<R: BufRead>(reader: R, path: &Path) -> Result<(Corpus, LoadReport)> {
    let mut report = LoadReport::default();
    let mut docs = Vec::new();
    for (line, rec) in read_jsonl_records::<DocumentRecord, _>(reader, path)? {
        let chars: Vec<char> = rec.text.chars().collect();
        let slice = |s: usize, e: usize| -> Option<String> { chars.get(s..e).map(|c| c.iter().collect()) };
        let mut sentences = Vec::new();
        for s in rec.sentences {
            let mut tokens = Vec::with_capacity(s.tokens.len());
            for t in &s.tokens {
                let text = slice(t.start, t.end).filter(|_| t.start < t.end).ok_or_else(|| Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!("sentence {}: token [{}, {}) outside the text", s.sent_id, t.start, t.end),
                })?;
                tokens.push(Token { text, start: t.start, end: t.end });
            }
            if tokens.len() < 2 {
                report.dropped_sentences += 1;
                report.dropped_sentence_ids.insert(s.sent_id);
                continue;
            }
            sentences.push(Sentence {
                sent_id: s.sent_id,
                doc_id: rec.doc_id.clone(),
                start: s.start,
                end: s.end,
                tokens,
            });
        }
        let doc = Document { doc_id: rec.doc_id, text: rec.text, sentences };
        doc.validate().map_err(|e| Error::Malformed { path: path.to_path_buf(), line, message: e.to_string() })?;
        docs.push(doc);
    }
    if report.dropped_sentences > 0 {
        log::warn!("{}: dropped {} sentences with fewer than two tokens", path.display(), report.dropped_sentences);
    }
    Ok((Corpus::new(docs)?, report))
}

/// Parses annotation layers against `corpus`. Spans on sentences listed in
/// `report.dropped_sentence_ids` are discarded and counted.
pub fn parse_annotations<R: BufRead>(
    reader: R,
    path: &Path,
    corpus: &Corpus,
    report: &mut LoadReport,
) -> Result<Vec<AnnotationLayer>> {
    let mut layers = Vec::new();
    for (line, rec) in read_jsonl_records::<LayerRecord, _>(reader, path)? {
        let mut layer = AnnotationLayer::new(rec.annotator_id, rec.group, rec.label_type);
        layer.coverage = rec.coverage.map(|c| c.into_iter().collect());
        for span in rec.spans {
            let Some(sentence) = corpus.sentence(&span.sent_id) else {
                if report.dropped_sentence_ids.contains(&span.sent_id) {
                    report.discarded_spans += 1;
                    continue;
                }
                return Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown sentence id {}", span.sent_id),
                });
            };
            if span.first >= span.last || span.last > sentence.len() {
                return Err(Error::SpanOutOfBounds {
                    sent_id: span.sent_id,
                    message: format!(
                        "span [{}, {}) outside a sentence of {} tokens ({}:{line})",
                        span.first,
                        span.last,
                        sentence.len(),
                        path.display()
                    ),
                });
            }
            layer.add_span(&span.sent_id, span.first, span.last)?;
        }
        layers.push(layer);
    }
    Ok(layers)
}

pub fn load_corpus_file(path: &Path) -> Result<(Corpus, LoadReport)> {
    parse_corpus(BufReader::new(File::open(path)?), path)
}

pub fn load_annotations(path: &Path, corpus: &Corpus, report: &mut LoadReport) -> Result<Vec<AnnotationLayer>> {
    parse_annotations(BufReader::new(File::open(path)?), path, corpus, report)
}

/// Loads a corpus file and any number of annotation files.
pub fn load_corpus<P: AsRef<Path>>(
    corpus_path: &Path,
    annotation_paths: &[P],
) -> Result<(Corpus, Vec<AnnotationLayer>, LoadReport)> {
    let (corpus, mut report) = load_corpus_file(corpus_path)?;
    let mut layers = Vec::new();
    for p in annotation_paths {
        layers.extend(load_annotations(p.as_ref(), &corpus, &mut report)?);
    }
    Ok((corpus, layers, report))
}

fn write_header<W: Write + ?Sized>(w: &mut W, header: Option<&Value>) -> Result<()> {
    if let Some(plan) = header {
        let line = serde_json::json!({ "kind": "header", "schema_version": SCHEMA_VERSION, "plan": plan });
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

/// Writes a corpus as JSONL, optionally preceded by a header line carrying `header`.
pub fn write_corpus<W: Write + ?Sized>(w: &mut W, corpus: &Corpus, header: Option<&Value>) -> Result<()> {
    write_header(w, header)?;
    for doc in corpus.documents() {
        let rec = DocumentRecord {
            schema_version: SCHEMA_VERSION.into(),
            doc_id: doc.doc_id.clone(),
            text: doc.text.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| SentenceRecord {
                    sent_id: s.sent_id.clone(),
                    start: s.start,
                    end: s.end,
                    tokens: s.tokens.iter().map(|t| TokenRecord { start: t.start, end: t.end }).collect(),
                })
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

pub fn write_annotations<W: Write + ?Sized>(
    w: &mut W,
    layers: &[AnnotationLayer],
    header: Option<&Value>,
) -> Result<()> {
    write_header(w, header)?;
    for layer in layers {
        let rec = LayerRecord {
            schema_version: SCHEMA_VERSION.into(),
            annotator_id: layer.annotator_id.clone(),
            group: layer.group,
            label_type: layer.label_type,
            spans: layer
                .spans
                .iter()
                .map(|s: &Span| SpanRecord { sent_id: s.sent_id.clone(), first: s.first, last: s.last })
                .collect(),
            coverage: layer.coverage.as_ref().map(|c| c.iter().cloned().collect()),
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORPUS: &str = r#"{"schema_version":"1","doc_id":"d1","text":"Aspirin helps. Ok","sentences":[{"sent_id":"d1.0","start":0,"end":14,"tokens":[{"start":0,"end":7},{"start":8,"end":13},{"start":13,"end":14}]},{"sent_id":"d1.1","start":15,"end":17,"tokens":[{"start":15,"end":17}]}]}
{"schema_version":"1","doc_id":"d2","text":"Two words","extra":true,"sentences":[{"sent_id":"d2.0","start":0,"end":9,"tokens":[{"start":0,"end":3},{"start":4,"end":9}]}]}
"#;

    fn path() -> &'static Path {
        Path::new("mem.jsonl")
    }

    #[test]
    fn loads_two_documents_and_drops_short_sentence() {
        let (corpus, report) = parse_corpus(CORPUS.as_bytes(), path()).unwrap();
        assert_eq!(corpus.documents().len(), 2);
        assert!(corpus.sentence("d1.1").is_none());
        assert_eq!(report.dropped_sentences, 1);
        assert_eq!(corpus.sentence("d1.0").unwrap().words().collect::<Vec<_>>(), vec!["Aspirin", "helps", "."]);
    }

    #[test]
    fn spans_on_dropped_sentences_are_discarded() {
        let (corpus, mut report) = parse_corpus(CORPUS.as_bytes(), path()).unwrap();
        let ann = r#"{"schema_version":"1","annotator_id":"w1","group":"crowd","label_type":"I","spans":[{"sent_id":"d1.0","first":0,"last":1},{"sent_id":"d1.1","first":0,"last":1}]}"#;
        let layers = parse_annotations(ann.as_bytes(), path(), &corpus, &mut report).unwrap();
        assert_eq!(layers[0].spans.len(), 1);
        assert_eq!(report.discarded_spans, 1);
    }

    #[test]
    fn out_of_bounds_span_names_sentence() {
        let (corpus, mut report) = parse_corpus(CORPUS.as_bytes(), path()).unwrap();
        let ann = r#"{"schema_version":"1","annotator_id":"w1","group":"crowd","label_type":"I","spans":[{"sent_id":"d2.0","first":1,"last":3}]}"#;
        let err = parse_annotations(ann.as_bytes(), path(), &corpus, &mut report).unwrap_err();
        match err {
            Error::SpanOutOfBounds { sent_id, .. } => assert_eq!(sent_id, "d2.0"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let text = format!("{CORPUS}{{not json\n");
        let err = parse_corpus(text.as_bytes(), path()).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
        assert!(err.to_string().starts_with("mem.jsonl:3:"));
    }

    #[test]
    fn schema_version_is_required() {
        let text = r#"{"doc_id":"d","text":"a b","sentences":[]}"#;
        assert!(matches!(parse_corpus(text.as_bytes(), path()), Err(Error::Malformed { line: 1, .. })));
        let text = r#"{"schema_version":"2","doc_id":"d","text":"a b","sentences":[]}"#;
        assert!(parse_corpus(text.as_bytes(), path()).is_err());
    }

    #[test]
    fn header_lines_are_skipped() {
        let text = format!("{{\"kind\":\"header\",\"plan\":{{}}}}\n{CORPUS}");
        let (corpus, _) = parse_corpus(text.as_bytes(), path()).unwrap();
        assert_eq!(corpus.documents().len(), 2);
    }

    #[test]
    fn round_trip_reproduces_input_minus_dropped() {
        let (corpus, _) = parse_corpus(CORPUS.as_bytes(), path()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus, None).unwrap();
        let (again, report) = parse_corpus(buf.as_slice(), path()).unwrap();
        assert_eq!(again, corpus);
        assert_eq!(report.dropped_sentences, 0);
        let mut buf2 = Vec::new();
        write_corpus(&mut buf2, &again, None).unwrap();
        assert_eq!(buf, buf2);
    }
}
