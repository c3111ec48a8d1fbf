use serde::{Deserialize, Serialize};

use super::{clipped_overlap, ngram_counts, MetricError, MetricScore, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothing {
    #[default]
    None,
    /// Add one to numerator and denominator of precisions for n >= 2.
    AddOne,
}

/// Sentence BLEU of `candidate` against a single `reference`.
///
/// Orders for which the candidate has no n-grams (it is shorter than n) are
/// left out of the geometric mean, so any sentence scores 1 against itself.
pub fn bleu(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    max_n: usize,
    smoothing: Smoothing,
) -> Result<MetricScore, MetricError> {
    if max_n == 0 {
        return Err(MetricError::Parameter {
            metric: "bleu",
            message: "max_n must be at least 1".into(),
        });
    }
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput("bleu"));
    }
    let (cand, refr) = (candidate.tokens(), reference.tokens());
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n.min(cand.len()) {
        let cc = ngram_counts(cand, n);
        let rc = ngram_counts(refr, n);
        let mut matched = clipped_overlap(&cc, &rc) as f64;
        let mut total = (cand.len() + 1 - n) as f64;
        if n >= 2 && smoothing == Smoothing::AddOne {
            matched += 1.0;
            total += 1.0;
        }
        if matched == 0.0 {
            let name = if max_n == 1 { "bleu1" } else { "bleu" };
            return Ok(MetricScore::similarity(name, 0.0));
        }
        log_sum += (matched / total).ln();
        orders += 1;
    }
    let bp = if cand.len() < refr.len() {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    } else {
        1.0
    };
    let name = if max_n == 1 { "bleu1" } else { "bleu" };
    Ok(MetricScore::similarity(name, bp * (log_sum / orders as f64).exp()))
}
