use super::{clipped_overlap, ngram_counts, MetricError, MetricScore};

/// Characters of the text with whitespace removed; n-grams span word boundaries.
fn char_stream(text: &str) -> Vec<char> {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// chrF with the customary n = 6, beta = 2.
pub fn chrf_default(hypothesis: &str, reference: &str) -> Result<MetricScore, MetricError> {
    chrf(hypothesis, reference, 6, 2.0)
}

/// Character n-gram F-score.
///
/// Precision and recall are averaged over the orders 1..=max_n that both
/// texts are long enough to have; the F-beta is taken of those averages.
pub fn chrf(hypothesis: &str, reference: &str, max_n: usize, beta: f64) -> Result<MetricScore, MetricError> {
    if max_n == 0 || !(beta > 0.0) {
        return Err(MetricError::Parameter {
            metric: "chrf",
            message: format!("need max_n >= 1 and beta > 0, got {max_n}, {beta}"),
        });
    }
    let hyp = char_stream(hypothesis);
    let refr = char_stream(reference);
    if hyp.is_empty() || refr.is_empty() {
        return Err(MetricError::EmptyInput("chrf"));
    }
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0usize);
    for n in 1..=max_n {
        if hyp.len() < n || refr.len() < n {
            break;
        }
        let hc = ngram_counts(&hyp, n);
        let rc = ngram_counts(&refr, n);
        let m = clipped_overlap(&hc, &rc) as f64;
        p_sum += m / (hyp.len() + 1 - n) as f64;
        r_sum += m / (refr.len() + 1 - n) as f64;
        orders += 1;
    }
    let p = p_sum / orders as f64;
    let r = r_sum / orders as f64;
    let b2 = beta * beta;
    let denom = b2 * p + r;
    let value = if denom == 0.0 { 0.0 } else { (1.0 + b2) * p * r / denom };
    let mut score = MetricScore::similarity("chrfScore", value);
    score.precision = Some(p);
    score.recall = Some(r);
    Ok(score)
}
