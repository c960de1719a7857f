use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{read_jsonl_records, LabelType, SCHEMA_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reference,
    Proxy,
    Predicted,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Reference => "reference",
            Source::Proxy => "proxy",
            Source::Predicted => "predicted",
        }
    }
}

/// A per-sentence difficulty score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRecord {
    pub sent_id: String,
    pub label_type: LabelType,
    pub score: f64,
    pub source: Source,
}

#[derive(Serialize, Deserialize)]
struct Line {
    schema_version: String,
    #[serde(flatten)]
    record: DifficultyRecord,
}

pub fn write_records_jsonl<W: Write + ?Sized>(
    w: &mut W,
    records: &[DifficultyRecord],
    header: Option<&Value>,
) -> Result<()> {
    if let Some(plan) = header {
        let line = serde_json::json!({ "kind": "header", "schema_version": SCHEMA_VERSION, "plan": plan });
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    for r in records {
        let line = Line { schema_version: SCHEMA_VERSION.into(), record: r.clone() };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

/// CSV with header `sent_id,label_type,score,source`. A plan echo, when
/// given, goes on a leading `#` comment line.
pub fn write_records_csv<W: Write + ?Sized>(
    w: &mut W,
    records: &[DifficultyRecord],
    header: Option<&Value>,
) -> Result<()> {
    if let Some(plan) = header {
        writeln!(w, "# schema_version={SCHEMA_VERSION} plan={}", serde_json::to_string(plan)?)?;
    }
    writeln!(w, "sent_id,label_type,score,source")?;
    for r in records {
        writeln!(w, "{},{},{},{}", r.sent_id, r.label_type, r.score, r.source.as_str())?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(reader: R, path: &Path) -> Result<Vec<DifficultyRecord>> {
    read_jsonl_records::<Line, _>(reader, path)?
        .into_iter()
        .map(|(line, l)| {
            if (0.0..=1.0).contains(&l.record.score) {
                Ok(l.record)
            } else {
                Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: format!("score {} outside [0, 1]", l.record.score),
                })
            }
        })
        .collect()
}
