//! Shared lexical basis for every ranker in the crate.
//!
//! Identifier-aware tokenization: a chunk like `acpi_battery_update` yields
//! the compound itself plus its snake-case parts, `readFileSync` yields the
//! lowercased compound plus its camel-case parts. Keeping the compound
//! preserves exact-identifier matches between bug reports and code; the parts
//! let prose queries reach code and vice versa.

use std::collections::HashSet;

use once_cell::sync::Lazy;

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if",
    "inline", "int", "long", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
    "unsigned", "void", "volatile", "while",
];

const ENGLISH_STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "all", "also", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "cannot", "could", "did", "does",
    "doing", "down", "during", "each", "few", "from", "further", "had",
    "has", "have", "having", "he", "her", "here", "hers", "him", "his",
    "how", "in", "into", "is", "it", "its", "itself", "just", "me", "more",
    "most", "my", "no", "nor", "not", "now", "of", "off", "on", "once",
    "only", "or", "other", "our", "ours", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we",
    "were", "what", "when", "where", "which", "who", "whom", "why", "will",
    "with", "would", "you", "your", "yours",
];

static STOPWORDS: Lazy<HashSet<&'static str>> = Lazy::new(|| {
    C_KEYWORDS
        .iter()
        .chain(ENGLISH_STOPWORDS.iter())
        .copied()
        .collect()
});

fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(token)
}

pub(crate) fn is_c_keyword(word: &str) -> bool {
    C_KEYWORDS.contains(&word)
}

fn keep(token: &str) -> bool {
    token.chars().count() >= 2 && !is_stopword(token)
}

/// Splits a single identifier-like chunk (letters, digits, underscores) into
/// its snake-case and camel-case parts, lowercased. Empty parts from leading,
/// trailing, or doubled underscores are dropped.
fn split_parts(chunk: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for piece in chunk.split('_') {
        if piece.is_empty() {
            continue;
        }
        let mut current = String::new();
        let mut prev_lower = false;
        for c in piece.chars() {
            // camelCase boundary: previous lowercase, current uppercase
            if prev_lower && c.is_uppercase() && !current.is_empty() {
                parts.push(current.to_lowercase());
                current = String::new();
            }
            prev_lower = c.is_lowercase();
            current.push(c);
        }
        if !current.is_empty() {
            parts.push(current.to_lowercase());
        }
    }
    parts
}

/// Tokenizes source or prose text into lowercase terms.
///
/// Rules: split on anything that is not a letter, digit, or `_`; split each
/// chunk on `_` and at lower-to-upper camel boundaries; emit the lowercased
/// compound followed by its parts (the compound is skipped when it equals its
/// single part); drop tokens shorter than 2 characters and tokens in the
/// built-in English + C-keyword stopword list.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chunk = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_alphanumeric() || c == '_' {
            chunk.push(c);
            continue;
        }
        if !chunk.is_empty() {
            let compound = chunk.to_lowercase();
            let parts = split_parts(&chunk);
            let trivial = parts.len() == 1 && parts[0] == compound;
            if !trivial && keep(&compound) {
                out.push(compound);
            }
            for part in parts {
                if keep(&part) {
                    out.push(part);
                }
            }
            chunk.clear();
        }
    }
    out
}
