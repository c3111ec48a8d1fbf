use std::collections::BTreeMap;

use ndarray::Array2;

use crate::textmetrics::{MetricScore, TokenSequence};

use super::embeddings::{euclidean, EmbeddingTable};
use super::transport::{solve_transport, TransportMethod, TransportProblem};
use super::EmbeddingError;

/// Normalized bag of words over in-vocabulary token types, in sorted order.
fn nbow(tokens: &TokenSequence, table: &EmbeddingTable) -> Result<(Vec<Vec<f64>>, Vec<f64>), EmbeddingError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens.tokens() {
        if table.contains(t) {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(EmbeddingError::NoRepresentableTokens);
    }
    let vectors = counts
        .keys()
        .map(|w| table.get(w).expect("filtered to in-vocabulary"))
        .collect();
    let weights = counts.values().map(|&c| c as f64 / total as f64).collect();
    Ok((vectors, weights))
}

/// Word Mover's Distance: optimal transport between the two bags of words
/// with Euclidean ground cost.
pub fn wmd(
    a: &TokenSequence,
    b: &TokenSequence,
    table: &EmbeddingTable,
    method: TransportMethod,
) -> Result<MetricScore, EmbeddingError> {
    let (va, wa) = nbow(a, table)?;
    let (vb, wb) = nbow(b, table)?;
    let cost = Array2::from_shape_fn((va.len(), vb.len()), |(i, j)| euclidean(&va[i], &vb[j]));
    let problem = TransportProblem::new(wa, wb, cost)?;
    let solution = solve_transport(&problem, method)?;
    Ok(MetricScore::distance("WMD", solution.cost))
}
