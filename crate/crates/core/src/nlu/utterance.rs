use serde::{Deserialize, Serialize};

/// A chat input with its normalized token list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub raw: String,
    pub tokens: Vec<String>,
    pub stamp: f64,
}

impl Utterance {
    pub fn new(raw: impl Into<String>, stamp: f64) -> Self {
        let raw = raw.into();
        Self {
            tokens: tokenize(&raw),
            raw,
            stamp,
        }
    }

    /// Normalized tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn normalize(raw: &str) -> Utterance {
    Utterance::new(raw, 0.0)
}

/// Lowercase, drop apostrophes (so "secretary's" becomes "secretarys"),
/// treat every other non-alphanumeric character as a separator.
pub fn tokenize(raw: &str) -> Vec<String> {
    let cleaned: String = raw
        .chars()
        .filter(|c| !matches!(c, '\'' | '\u{2019}'))
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// True if `needle` occurs as a contiguous run inside `haystack`.
pub(crate) fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}
