//! Rule-based sentence splitting and tokenization.
//!
//! All offsets are character (Unicode scalar) offsets, end-exclusive.

const TERMINATORS: [char; 3] = ['.', '?', '!'];
const OPENERS: [char; 4] = ['(', '[', '"', '\u{201c}'];
const CLOSERS: [char; 6] = [')', ']', '}', '"', '\'', '\u{201d}'];

/// Lowercased words (without the final period) that do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "co", "dr", "e.g", "eq", "fig", "figs", "i.e", "inc", "jr", "ltd", "mr", "mrs", "ms",
    "no", "nos", "prof", "resp", "sr", "st", "vol", "vs",
];

/// Splits `text` into sentence ranges.
///
/// A sentence ends at a run of `.`, `?` or `!` (plus trailing closing
/// brackets or quotes) that is followed by whitespace and then an uppercase
/// letter or a digit (optionally behind an opening bracket or quote). A period closing a listed abbreviation or a single
/// capital initial never ends a sentence. Ranges are trimmed of surrounding
/// whitespace, so together they cover every non-whitespace character.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = Vec::new();

    let skip_ws = |mut j: usize| {
        while j < n && chars[j].is_whitespace() {
            j += 1;
        }
        j
    };
    let starts_sentence = |j: usize| {
        let j = if j < n && OPENERS.contains(&chars[j]) { j + 1 } else { j };
        j < n && (chars[j].is_uppercase() || chars[j].is_ascii_digit())
    };
    let mut start = skip_ws(0);
    let mut i = start;
    while i < n {
        if !TERMINATORS.contains(&chars[i]) {
            i += 1;
            continue;
        }
        let term_start = i;
        let mut j = i;
        while j < n && TERMINATORS.contains(&chars[j]) {
            j += 1;
        }
        while j < n && CLOSERS.contains(&chars[j]) {
            j += 1;
        }
        let end = j;
        let next = skip_ws(end);
        let boundary = next > end
            && starts_sentence(next)
            && !(chars[term_start] == '.' && end - term_start == 1 && protected(&chars, start, term_start));
        if boundary {
            out.push((start, end));
            start = next;
            i = next;
        } else {
            i = end;
        }
    }
    if start < n {
        let mut end = n;
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > start {
            out.push((start, end));
        }
    }
    out
}

/// Whether the period at `dot` closes an abbreviation or an initial.
fn protected(chars: &[char], sentence_start: usize, dot: usize) -> bool {
    let mut k = dot;
    while k > sentence_start && !chars[k - 1].is_whitespace() && chars[k - 1] != '(' {
        k -= 1;
    }
    let word: String = chars[k..dot].iter().collect::<String>().to_lowercase();
    if word.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    let mut letters = chars[k..dot].iter();
    matches!((letters.next(), letters.next()), (Some(c), None) if c.is_uppercase())
}

/// Tokenizes the character range `[start, end)` of `text`.
///
/// Whitespace separates tokens; within a chunk, runs of alphanumerics form
/// one token (a `.` or `,` between two digits stays inside the token, so
/// `2.5` and `1,000` are single tokens) and every other character is a
/// token of its own.
pub fn tokenize(text: &str, start: usize, end: usize) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().skip(start).take(end.saturating_sub(start)).collect();
    let n = chars.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if !c.is_alphanumeric() {
            out.push((start + i, start + i + 1));
            i += 1;
            continue;
        }
        let tok_start = i;
        while i < n {
            // digit-separator inside a number stays part of the token
            let separator = (chars[i] == '.' || chars[i] == ',')
                && i > tok_start
                && chars[i - 1].is_ascii_digit()
                && i + 1 < n
                && chars[i + 1].is_ascii_digit();
            if chars[i].is_alphanumeric() || separator {
                i += 1;
            } else {
                break;
            }
        }
        out.push((start + tok_start, start + i));
    }
    out
}

/// Returns the substring covering the character range `[start, end)`.
pub fn char_slice(text: &str, start: usize, end: usize) -> String {
    text.chars().skip(start).take(end.saturating_sub(start)).collect()
}
