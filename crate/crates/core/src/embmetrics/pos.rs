use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::corpus::PairId;
use crate::textmetrics::{stem, MetricScore, TokenSequence};

use super::embeddings::{euclidean, EmbeddingTable};
use super::EmbeddingError;

const BUNDLED_NOUNS: &str = include_str!("../../data/nouns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

/// Marks which token positions of a sentence are nouns.
pub trait NounTagger: Sync {
    fn noun_positions(&self, pair: &PairId, side: Side, tokens: &TokenSequence) -> Result<Vec<usize>, EmbeddingError>;
}

/// Dictionary tagger: a token is a noun when its stem is the stem of a
/// listed noun, so plural forms are found too.
#[derive(Debug, Clone)]
pub struct LexiconNounTagger {
    stems: HashSet<String>,
}

impl LexiconNounTagger {
    pub fn new<I: IntoIterator<Item = S>, S: AsRef<str>>(nouns: I) -> Self {
        LexiconNounTagger {
            stems: nouns.into_iter().map(|n| stem(&n.as_ref().to_lowercase())).collect(),
        }
    }

    pub fn bundled() -> Self {
        LexiconNounTagger::new(BUNDLED_NOUNS.lines().map(str::trim).filter(|l| !l.is_empty()))
    }
}

impl NounTagger for LexiconNounTagger {
    fn noun_positions(&self, _pair: &PairId, _side: Side, tokens: &TokenSequence) -> Result<Vec<usize>, EmbeddingError> {
        Ok(tokens
            .tokens()
            .iter()
            .enumerate()
            .filter(|(_, t)| self.stems.contains(&stem(t)))
            .map(|(i, _)| i)
            .collect())
    }
}

/// Per-token tags supplied from a file with header
/// `pair_id,side,token_index,tag`. Tags starting with `NN`, and the
/// universal `NOUN` and `PROPN`, count as nouns.
#[derive(Debug, Clone, Default)]
pub struct GoldNounTags {
    nouns: BTreeMap<(PairId, Side), BTreeSet<usize>>,
}

#[derive(Deserialize)]
struct TagRow {
    pair_id: String,
    side: Side,
    token_index: usize,
    tag: String,
}

fn is_noun_tag(tag: &str) -> bool {
    tag.starts_with("NN") || tag == "NOUN" || tag == "PROPN"
}

impl GoldNounTags {
    pub fn from_file(path: &Path) -> Result<Self, EmbeddingError> {
        let parse_err = |line: usize, message: String| EmbeddingError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(0, e.to_string()))?;
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        let mut tags = GoldNounTags::default();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let row: TagRow = rec
                .deserialize(Some(&headers))
                .map_err(|e| parse_err(line, e.to_string()))?;
            let entry = tags
                .nouns
                .entry((PairId::from(row.pair_id.as_str()), row.side))
                .or_default();
            if is_noun_tag(&row.tag) {
                entry.insert(row.token_index);
            }
        }
        Ok(tags)
    }
}

impl NounTagger for GoldNounTags {
    fn noun_positions(&self, pair: &PairId, side: Side, tokens: &TokenSequence) -> Result<Vec<usize>, EmbeddingError> {
        let found = self
            .nouns
            .get(&(pair.clone(), side))
            .ok_or_else(|| EmbeddingError::Tagger(format!("no tags for pair {pair} side {side:?}")))?;
        if let Some(&bad) = found.iter().find(|&&i| i >= tokens.len()) {
            return Err(EmbeddingError::Tagger(format!(
                "tag index {bad} out of range for pair {pair} side {side:?} ({} tokens)",
                tokens.len()
            )));
        }
        Ok(found.iter().copied().collect())
    }
}

/// How noun distances are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PosAggregation {
    /// Mean over a minimum-cost one-to-one matching.
    #[default]
    Matching,
    /// Mean over every cross pair.
    AllPairs,
}

/// Minimum-cost assignment of every row to a distinct column (rows ≤ cols).
/// Returns the column chosen for each row.
pub fn min_cost_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let (n, m) = cost.dim();
    assert!(n <= m, "more rows than columns");
    // 1-based potentials formulation; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

fn noun_vectors(
    pair: &PairId,
    side: Side,
    tokens: &TokenSequence,
    tagger: &dyn NounTagger,
    table: &EmbeddingTable,
) -> Result<Vec<Vec<f64>>, EmbeddingError> {
    let positions = tagger.noun_positions(pair, side, tokens)?;
    let types: BTreeSet<&str> = positions.iter().map(|&i| tokens.tokens()[i].as_str()).collect();
    Ok(types.into_iter().filter_map(|w| table.get(w)).collect())
}

/// Mean Euclidean distance between the noun embeddings of the two sides.
///
/// Returns `Ok(None)` when either side has no in-vocabulary noun; such pairs
/// are left out of correlations.
pub fn pos_distance(
    pair: &PairId,
    a: &TokenSequence,
    b: &TokenSequence,
    tagger: &dyn NounTagger,
    table: &EmbeddingTable,
    aggregation: PosAggregation,
) -> Result<Option<MetricScore>, EmbeddingError> {
    let na = noun_vectors(pair, Side::A, a, tagger, table)?;
    let nb = noun_vectors(pair, Side::B, b, tagger, table)?;
    if na.is_empty() || nb.is_empty() {
        return Ok(None);
    }
    let (rows, cols) = if na.len() <= nb.len() { (&na, &nb) } else { (&nb, &na) };
    let cost = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| euclidean(&rows[i], &cols[j]));
    let value = match aggregation {
        PosAggregation::Matching => {
            let assignment = min_cost_assignment(&cost);
            assignment.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum::<f64>() / rows.len() as f64
        }
        PosAggregation::AllPairs => cost.mean().expect("non-empty"),
    };
    Ok(Some(MetricScore::distance("POS_dist_score", value)))
}
