//! Keyword profiling of reasoning transcripts: per-category keyword rates
//! per 1,000 tokens.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Category name to keyword list. The shipped default covers three
/// functional groups (soliloquy, verification, and summary/calculation
/// phrases); it is an editable data file, not a fixed vocabulary, and
/// rates computed with it are not comparable across different lexicons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub categories: BTreeMap<String, Vec<String>>,
}

const DEFAULT_LEXICON: &str = include_str!("../../data/default_lexicon.json");

impl Default for Lexicon {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_LEXICON).expect("shipped lexicon parses")
    }
}

impl Lexicon {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

/// Keyword occurrences per 1,000 tokens for each category.
///
/// Tokenization is whitespace splitting; matching is case-insensitive on
/// whole words after trimming surrounding punctuation, so "Wait," matches
/// "wait" but "Awaits" does not. Empty text yields zero for every category.
pub fn keyword_profile(text: &str, lexicon: &Lexicon) -> BTreeMap<String, f64> {
    let tokens: Vec<String> = text
        .split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| c.is_ascii_punctuation())
                .to_lowercase()
        })
        .collect();
    let total = text.split_whitespace().count();

    let mut rates = BTreeMap::new();
    for (category, words) in &lexicon.categories {
        if total == 0 {
            rates.insert(category.clone(), 0.0);
            continue;
        }
        let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let matches = tokens
            .iter()
            .filter(|t| lowered.iter().any(|w| w == *t))
            .count();
        rates.insert(category.clone(), 1000.0 * matches as f64 / total as f64);
    }
    rates
}
