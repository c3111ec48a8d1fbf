use super::{clipped_overlap, f1, ngram_counts, MetricError, MetricScore, TokenSequence};

/// ROUGE-N F1 of `a` (candidate) against `b` (reference).
///
/// When one side is shorter than `n` the score is 0, unless both are and the
/// sequences are equal, which scores 1.
pub fn rouge_n(a: &TokenSequence, b: &TokenSequence, n: usize) -> Result<MetricScore, MetricError> {
    if n == 0 {
        return Err(MetricError::Parameter {
            metric: "rouge_n",
            message: "n must be at least 1".into(),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyInput("rouge_n"));
    }
    let name = format!("ROUGE-{n}");
    let (ta, tb) = (a.tokens(), b.tokens());
    if ta.len() < n || tb.len() < n {
        let v = if ta == tb { 1.0 } else { 0.0 };
        return Ok(MetricScore::similarity(&name, v).with_pr(v, v));
    }
    let ca = ngram_counts(ta, n);
    let cb = ngram_counts(tb, n);
    let m = clipped_overlap(&ca, &cb) as f64;
    let precision = m / (ta.len() + 1 - n) as f64;
    let recall = m / (tb.len() + 1 - n) as f64;
    Ok(MetricScore::similarity(&name, f1(precision, recall)).with_pr(precision, recall))
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

/// LCS-based ROUGE-L F1.
pub fn rouge_l(a: &TokenSequence, b: &TokenSequence) -> Result<MetricScore, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyInput("rouge_l"));
    }
    let l = lcs_len(a.tokens(), b.tokens()) as f64;
    let precision = l / a.len() as f64;
    let recall = l / b.len() as f64;
    Ok(MetricScore::similarity("ROUGE-l", f1(precision, recall)).with_pr(precision, recall))
}
