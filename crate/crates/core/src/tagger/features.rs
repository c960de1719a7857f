//! Token feature templates and feature hashing.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Bumped whenever the templates below change.
pub const TEMPLATE_VERSION: u32 = 1;

/// 64-bit FNV-1a. Stable across platforms and releases; distinct feature
/// strings may collide, in which case they share weights.
pub fn feature_id(feature: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    feature.bytes().fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Character classes (`X` upper, `x` lower, `d` digit, other characters
/// verbatim) with runs capped at three repeats: `The` -> `Xxx`,
/// `2.5` -> `d.d`, `dosage` -> `xxx`.
pub fn word_shape(word: &str) -> String {
    let mut shape = String::new();
    let mut last = None;
    let mut run = 0;
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_ascii_digit() {
            'd'
        } else {
            c
        };
        if Some(class) == last {
            run += 1;
        } else {
            run = 1;
            last = Some(class);
        }
        if run <= 3 {
            shape.push(class);
        }
    }
    shape
}

fn is_digit_like(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit()) && word.chars().all(|c| c.is_ascii_digit() || ".,".contains(c))
}

fn affix(word: &str, n: usize, prefix: bool) -> Option<String> {
    let chars: Vec<char> = word.chars().collect();
    (chars.len() >= n).then(|| {
        if prefix {
            chars[..n].iter().collect()
        } else {
            chars[chars.len() - n..].iter().collect()
        }
    })
}

/// Feature strings for the token at `position`.
pub fn extract_features<S: AsRef<str>>(words: &[S], position: usize) -> Result<BTreeSet<String>> {
    if position >= words.len() {
        return Err(Error::InvalidConfig(format!(
            "position {position} out of range for a sentence of {} tokens",
            words.len()
        )));
    }
    let word = words[position].as_ref();
    let lower = word.to_lowercase();
    let mut f = BTreeSet::new();
    f.insert("bias".to_string());
    f.insert(format!("w={lower}"));
    for n in 2..=3 {
        if let Some(p) = affix(&lower, n, true) {
            f.insert(format!("p{n}={p}"));
        }
        if let Some(s) = affix(&lower, n, false) {
            f.insert(format!("s{n}={s}"));
        }
    }
    f.insert(format!("shape={}", word_shape(word)));
    if is_digit_like(word) {
        f.insert("digit=true".to_string());
    }
    match position.checked_sub(1) {
        Some(p) => f.insert(format!("prev={}", words[p].as_ref().to_lowercase())),
        None => f.insert("first=true".to_string()),
    };
    match words.get(position + 1) {
        Some(n) => f.insert(format!("next={}", n.as_ref().to_lowercase())),
        None => f.insert("last=true".to_string()),
    };
    Ok(f)
}

/// Hashed feature ids for every position of a sentence.
pub fn sentence_feature_ids<S: AsRef<str>>(words: &[S]) -> Vec<Vec<u64>> {
    (0..words.len())
        .map(|i| extract_features(words, i).expect("in range").iter().map(|f| feature_id(f)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_token_templates() {
        let f = extract_features(&["The", "dose"], 0).unwrap();
        for want in ["w=the", "shape=Xxx", "first=true", "next=dose"] {
            assert!(f.contains(want), "missing {want} in {f:?}");
        }
        assert!(!f.contains("last=true"));
    }

    #[test]
    fn last_token_templates() {
        let f = extract_features(&["The", "dose"], 1).unwrap();
        for want in ["w=dose", "prev=the", "last=true", "p2=do", "s3=ose"] {
            assert!(f.contains(want), "missing {want} in {f:?}");
        }
    }

    #[test]
    fn decimal_token() {
        let f = extract_features(&["2.5"], 0).unwrap();
        assert!(f.contains("shape=d.d"));
        assert!(f.contains("digit=true"));
    }

    #[test]
    fn out_of_range_position() {
        assert!(extract_features(&["a", "b"], 2).is_err());
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("dosage"), "xxx");
        assert_eq!(word_shape("IL-12"), "XX-dd");
        assert_eq!(word_shape("McDonald"), "XxXxxx");
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(feature_id(""), 0xcbf29ce484222325);
        assert_eq!(feature_id("a"), 0xaf63dc4c8601ec8c);
    }
}
