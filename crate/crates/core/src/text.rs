//! Tokenization shared by every word-based computation.
//!
//! A token is a maximal run of letters and digits; an apostrophe (`'` or
//! `’`) joins two such runs, so `you're` is one token and the quotes around
//! `'data'` are separators. Everything else separates tokens.
//!
//! Stopwords come from the pinned list in `data/stopwords_en.txt` (179
//! words), except `you`, `your`, `them` and `we`, which are kept because
//! they are often senders or recipients. Matching is case-insensitive.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{FlowStatement, ParameterKind, Span};

/// The pinned stopword file, one lowercase word per line.
pub const STOPWORD_FILE: &str = include_str!("../data/stopwords_en.txt");

/// Pronouns removed from the stopword list.
pub const RETAINED_PRONOUNS: [&str; 4] = ["you", "your", "them", "we"];

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Token {
    pub text: String,
    /// Character offset of the first character.
    pub start: usize,
    /// Character offset one past the last character.
    pub end: usize,
    pub is_stopword: bool,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercased form used for stopword and lexicon lookups.
pub fn fold(word: &str) -> String {
    word.chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect()
}

pub fn is_stopword(word: &str) -> bool {
    let folded = fold(word);
    if RETAINED_PRONOUNS.contains(&folded.as_str()) {
        return false;
    }
    STOPWORD_FILE.lines().any(|w| w == folded)
}

/// Splits `text` into tokens with character offsets.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() {
            if chars[i].is_alphanumeric() {
                i += 1;
            } else if is_apostrophe(chars[i])
                && chars.get(i + 1).is_some_and(|c| c.is_alphanumeric())
            {
                i += 2;
            } else {
                break;
            }
        }
        let word: String = chars[start..i].iter().collect();
        let is_stopword = is_stopword(&word);
        tokens.push(Token {
            text: word,
            start,
            end: i,
            is_stopword,
        });
    }
    tokens
}

/// Non-stopword tokens of `text`, in order.
pub fn content_tokens(text: &str) -> Vec<Token> {
    tokenize(text).into_iter().filter(|t| !t.is_stopword).collect()
}

/// The kind of the span containing `offset`. `spans` must be sorted.
pub fn kind_at(spans: &[Span], offset: usize) -> Option<ParameterKind> {
    let idx = spans.partition_point(|s| s.end() <= offset);
    spans
        .get(idx)
        .filter(|s| s.contains(offset))
        .map(|s| s.kind())
}

/// Pairs each non-stopword token with the kind of the span that contains
/// the token's first character. `spans` must be sorted and non-overlapping.
pub fn label_tokens(text: &str, spans: &[Span]) -> Vec<(Token, Option<ParameterKind>)> {
    content_tokens(text)
        .into_iter()
        .map(|t| {
            let kind = kind_at(spans, t.start);
            (t, kind)
        })
        .collect()
}

/// Word-level view of a flow: its non-stopword tokens and their labels.
pub fn words_with_kind(flow: &FlowStatement) -> Vec<(Token, Option<ParameterKind>)> {
    label_tokens(flow.text(), flow.spans())
}
