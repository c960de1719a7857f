use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// Word vectors of one fixed dimension. Unknown words map to zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("embedding dimension must be positive".into()));
        }
        if let Some((w, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::InvalidConfig(format!("vector for {w:?} has {} values, expected {dim}", v.len())));
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    /// Reads `token v1 ... vd` lines (GloVe text format).
    pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let malformed = |message: String| Error::Malformed { path: path.to_path_buf(), line: i + 1, message };
            let values = parts
                .map(|p| p.parse::<f64>().map_err(|e| malformed(format!("{p:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(malformed(format!("expected {d} values, found {}", values.len())));
                }
                _ => {}
            }
            vectors.insert(token.to_string(), values);
        }
        let dim = dim.ok_or_else(|| Error::InvalidConfig(format!("{}: no vectors", path.display())))?;
        Self::new(dim, vectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).or_else(|| self.vectors.get(&word.to_lowercase())).map(Vec::as_slice)
    }

    /// Mean vector over all words, counting unknown words as zeros.
    pub fn mean<S: AsRef<str>>(&self, words: &[S]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        if words.is_empty() {
            return out;
        }
        for v in words.iter().filter_map(|w| self.get(w.as_ref())) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
        let n = words.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_mean() {
        let text = "dose 1 2\nthe 0 4\n";
        let t = EmbeddingTable::parse(text.as_bytes(), Path::new("e.txt")).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.mean(&["The", "dose", "zzz"]), vec![1.0 / 3.0, 2.0]);
    }

    #[test]
    fn ragged_file_is_rejected() {
        let text = "a 1 2\nb 1\n";
        let err = EmbeddingTable::parse(text.as_bytes(), Path::new("e.txt")).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
    }
}
