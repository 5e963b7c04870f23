//! Corpus BLEU-4 and averaged sentence GLEU over response turns.
//!
//! Both metrics share [`tokenize`]: lowercase, alphanumeric runs are tokens
//! and every other non-space character is a token by itself.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Dataset;
use crate::transform::{ResponseCategory, SplitTag};

pub const MAX_ORDER: usize = 4;
/// Stand-in for a zero n-gram precision in the geometric mean.
pub const PRECISION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextMetricError {
    #[error("no prediction/reference pairs to score")]
    EmptyInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub prediction: String,
    pub reference: String,
    pub category: ResponseCategory,
    pub split_tag: SplitTag,
    pub dataset: Dataset,
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped matches and n-gram totals per order for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NgramStats {
    pub matches: [usize; MAX_ORDER],
    pub pred_totals: [usize; MAX_ORDER],
    pub ref_totals: [usize; MAX_ORDER],
    pub pred_len: usize,
    pub ref_len: usize,
}

impl NgramStats {
    pub fn of(prediction: &str, reference: &str) -> Self {
        let p = tokenize(prediction);
        let r = tokenize(reference);
        let mut s = Self {
            pred_len: p.len(),
            ref_len: r.len(),
            ..Self::default()
        };
        for n in 1..=MAX_ORDER {
            let pc = ngram_counts(&p, n);
            let rc = ngram_counts(&r, n);
            s.matches[n - 1] = pc
                .iter()
                .map(|(g, c)| (*c).min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            s.pred_totals[n - 1] = p.len().saturating_sub(n - 1);
            s.ref_totals[n - 1] = r.len().saturating_sub(n - 1);
        }
        s
    }

    /// Element-wise sum; associative and commutative.
    pub fn merge(mut self, other: Self) -> Self {
        for i in 0..MAX_ORDER {
            self.matches[i] += other.matches[i];
            self.pred_totals[i] += other.pred_totals[i];
            self.ref_totals[i] += other.ref_totals[i];
        }
        self.pred_len += other.pred_len;
        self.ref_len += other.ref_len;
        self
    }

    /// BLEU-4 over these aggregate counts. An order with no n-grams on
    /// either side carries no evidence and is left out of the mean.
    pub fn bleu(&self) -> f64 {
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for i in 0..MAX_ORDER {
            if self.pred_totals[i] == 0 && self.ref_totals[i] == 0 {
                continue;
            }
            let p = if self.pred_totals[i] == 0 {
                0.0
            } else {
                self.matches[i] as f64 / self.pred_totals[i] as f64
            };
            log_sum += p.max(PRECISION_FLOOR).ln();
            orders += 1;
        }
        if orders == 0 {
            return 1.0;
        }
        let bp = if self.pred_len >= self.ref_len {
            1.0
        } else if self.pred_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.pred_len as f64).exp()
        };
        (bp * (log_sum / orders as f64).exp()).clamp(0.0, 1.0)
    }

    /// min(precision, recall) with n-grams of orders `1..=max_order` pooled.
    pub fn gleu_up_to(&self, max_order: usize) -> f64 {
        let k = max_order.clamp(1, MAX_ORDER);
        let m: usize = self.matches[..k].iter().sum();
        let pt: usize = self.pred_totals[..k].iter().sum();
        let rt: usize = self.ref_totals[..k].iter().sum();
        match (pt, rt) {
            (0, 0) => 1.0,
            (0, _) | (_, 0) => 0.0,
            _ => (m as f64 / pt as f64).min(m as f64 / rt as f64),
        }
    }

    pub fn gleu(&self) -> f64 {
        self.gleu_up_to(MAX_ORDER)
    }
}

fn stats(pairs: &[ScoredPair]) -> Vec<NgramStats> {
    pairs
        .par_iter()
        .map(|p| NgramStats::of(&p.prediction, &p.reference))
        .collect()
}

/// Corpus-level BLEU-4.
pub fn bleu4(pairs: &[ScoredPair]) -> Result<f64, TextMetricError> {
    if pairs.is_empty() {
        return Err(TextMetricError::EmptyInput);
    }
    let total = stats(pairs)
        .into_iter()
        .fold(NgramStats::default(), NgramStats::merge);
    Ok(total.bleu())
}

/// Mean sentence GLEU.
pub fn gleu(pairs: &[ScoredPair]) -> Result<f64, TextMetricError> {
    if pairs.is_empty() {
        return Err(TextMetricError::EmptyInput);
    }
    let scores: Vec<f64> = stats(pairs).iter().map(NgramStats::gleu).collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

pub fn sentence_gleu(prediction: &str, reference: &str) -> f64 {
    NgramStats::of(prediction, reference).gleu()
}
