use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tagger::feature_id;

/// Hashed bag of 1..=n_max-grams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramFeaturizer {
    pub n_max: usize,
    pub hash_dim: usize,
    pub lowercase: bool,
}

impl Default for NgramFeaturizer {
    fn default() -> Self {
        NgramFeaturizer { n_max: 3, hash_dim: 1 << 20, lowercase: true }
    }
}

/// Sparse vector as `(index, value)` pairs sorted by index, no duplicates.
pub type SparseVector = Vec<(u32, f64)>;

impl NgramFeaturizer {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::InvalidConfig("n_max must be at least 1".into()));
        }
        if !self.hash_dim.is_power_of_two() || self.hash_dim > 1 << 31 {
            return Err(Error::InvalidConfig(format!("hash_dim must be a power of two, got {}", self.hash_dim)));
        }
        Ok(())
    }

    /// Counts of every n-gram (n = 1..=n_max) hashed into `hash_dim` buckets.
    pub fn featurize<S: AsRef<str>>(&self, words: &[S]) -> SparseVector {
        let words: Vec<String> = words
            .iter()
            .map(|w| if self.lowercase { w.as_ref().to_lowercase() } else { w.as_ref().to_string() })
            .collect();
        let mask = (self.hash_dim - 1) as u64;
        let mut buckets: Vec<u32> = Vec::new();
        for n in 1..=self.n_max.min(words.len()) {
            for gram in words.windows(n) {
                let key = format!("{n}:{}", gram.join(" "));
                buckets.push((feature_id(&key) & mask) as u32);
            }
        }
        buckets.sort_unstable();
        let mut out: SparseVector = Vec::new();
        for b in buckets {
            match out.last_mut() {
                Some((i, c)) if *i == b => *c += 1.0,
                _ => out.push((b, 1.0)),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_count() {
        let f = NgramFeaturizer { n_max: 2, ..Default::default() };
        let v = f.featurize(&["a", "b"]);
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|&(_, c)| c == 1.0));
    }

    #[test]
    fn repeated_unigram() {
        let f = NgramFeaturizer { n_max: 1, ..Default::default() };
        assert_eq!(f.featurize(&["a", "a"]).iter().map(|p| p.1).collect::<Vec<_>>(), vec![2.0]);
    }

    #[test]
    fn deterministic_and_order_sensitive() {
        let f = NgramFeaturizer::default();
        assert_eq!(f.featurize(&["x", "y", "z"]), f.featurize(&["x", "y", "z"]));
        assert_ne!(f.featurize(&["a", "b"]), f.featurize(&["b", "a"]));
        let uni = NgramFeaturizer { n_max: 1, ..Default::default() };
        assert_eq!(uni.featurize(&["a", "b"]), uni.featurize(&["b", "a"]));
    }

    #[test]
    fn lowercasing() {
        let f = NgramFeaturizer::default();
        assert_eq!(f.featurize(&["Dose"]), f.featurize(&["dose"]));
        let keep = NgramFeaturizer { lowercase: false, ..f };
        assert_ne!(keep.featurize(&["Dose"]), keep.featurize(&["dose"]));
    }

    #[test]
    fn validation() {
        assert!(NgramFeaturizer { n_max: 0, ..Default::default() }.validate().is_err());
        assert!(NgramFeaturizer { hash_dim: 1000, ..Default::default() }.validate().is_err());
        assert!(NgramFeaturizer::default().validate().is_ok());
    }
}
