use serde::{Deserialize, Serialize};

pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyMatch {
    pub matched: bool,
    pub score: f64,
}

const QUOTES: &[char] = &['\'', '"', '`', '\u{2018}', '\u{2019}', '\u{201C}', '\u{201D}'];

/// Lowercase, collapse whitespace runs and strip surrounding quotes.
pub fn normalize_for_match(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(QUOTES)
        .trim()
        .to_lowercase()
}

/// Normalized Levenshtein similarity, thresholded.
pub fn fuzzy_match(a: &str, b: &str, threshold: f64) -> FuzzyMatch {
    let a = normalize_for_match(a);
    let b = normalize_for_match(b);
    let longest = a.chars().count().max(b.chars().count());
    let score = if longest == 0 {
        1.0
    } else {
        let dist = strsim::levenshtein(&a, &b);
        (longest - dist) as f64 / longest as f64
    };
    FuzzyMatch {
        matched: score >= threshold,
        score,
    }
}
