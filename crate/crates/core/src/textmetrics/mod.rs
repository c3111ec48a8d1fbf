//! Lexical similarity metrics: word overlap, BLEU, chrF, ROUGE and a
//! stemming-only METEOR variant.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_segmentation::UnicodeSegmentation;

mod bleu;
mod chrf;
mod meteor;
mod rouge;

pub use bleu::{bleu, Smoothing};
pub use chrf::{chrf, chrf_default};
pub use meteor::{meteor_lite, stem};
pub use rouge::{lcs_len, rouge_l, rouge_n};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty input to {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter for {metric}: {message}")]
    Parameter { metric: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Similarity,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub metric_name: String,
    pub value: f64,
    pub orientation: Orientation,
    /// Component precision/recall where the metric has them.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl MetricScore {
    pub fn similarity(name: &str, value: f64) -> Self {
        MetricScore {
            metric_name: name.to_string(),
            value,
            orientation: Orientation::Similarity,
            precision: None,
            recall: None,
        }
    }

    pub fn distance(name: &str, value: f64) -> Self {
        MetricScore {
            orientation: Orientation::Distance,
            ..MetricScore::similarity(name, value)
        }
    }

    fn with_pr(mut self, precision: f64, recall: f64) -> Self {
        self.precision = Some(precision);
        self.recall = Some(recall);
        self
    }
}

/// Lowercased word tokens of a text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Self {
        TokenSequence(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn types(&self) -> BTreeSet<&str> {
        self.0.iter().map(String::as_str).collect()
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSequence(iter.into_iter().map(Into::into).collect())
    }
}

/// Lowercase and split on Unicode word boundaries; punctuation is dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    let normalized = text.replace(['\u{2019}', '\u{2018}'], "'");
    normalized
        .unicode_words()
        .map(|w| w.to_lowercase())
        .collect()
}

/// How the word-overlap score is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// Shared types over the union of types.
    #[default]
    Jaccard,
    /// Shared types over the types of the first sequence.
    Precision,
}

pub fn word_overlap(a: &TokenSequence, b: &TokenSequence) -> Result<MetricScore, MetricError> {
    word_overlap_with(a, b, OverlapMode::Jaccard)
}

pub fn word_overlap_with(
    a: &TokenSequence,
    b: &TokenSequence,
    mode: OverlapMode,
) -> Result<MetricScore, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyInput("word_overlap"));
    }
    let (ta, tb) = (a.types(), b.types());
    let shared = ta.intersection(&tb).count() as f64;
    let value = match mode {
        OverlapMode::Jaccard => shared / ta.union(&tb).count() as f64,
        OverlapMode::Precision => shared / ta.len() as f64,
    };
    Ok(MetricScore::similarity("1-gram_overlap", value))
}

/// Counts of contiguous `n`-grams.
pub(crate) fn ngram_counts<T: Eq + Hash>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for w in items.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Sum over n-grams of `min(count_a, count_b)`.
pub(crate) fn clipped_overlap<T: Eq + Hash>(a: &HashMap<&[T], usize>, b: &HashMap<&[T], usize>) -> usize {
    a.iter()
        .map(|(g, &ca)| b.get(g).map_or(0, |&cb| ca.min(cb)))
        .sum()
}

pub(crate) fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}
