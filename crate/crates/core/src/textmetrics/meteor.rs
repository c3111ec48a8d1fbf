use std::collections::HashMap;
use std::sync::LazyLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::{MetricError, MetricScore, TokenSequence};

static STEMMER: LazyLock<Stemmer> = LazyLock::new(|| Stemmer::create(Algorithm::English));

/// Porter2 (Snowball English) stem of a lowercase token.
pub fn stem(token: &str) -> String {
    STEMMER.stem(token).into_owned()
}

/// Fragmentation penalty weight and exponent.
const GAMMA: f64 = 0.5;
const BETA: f64 = 3.0;

/// Search nodes before the chunk minimization settles for the best found.
const SEARCH_BUDGET: usize = 200_000;

/// METEOR with exact and stemmed unigram matches only (no synonymy).
///
/// Tokens match when their stems agree, which includes exact matches. The
/// alignment has the maximum number of matches and, among those, the fewest
/// chunks. The penalty is `0.5 * ((chunks - 1) / (matches - 1))^3`, which is
/// zero for a single contiguous chunk.
pub fn meteor_lite(a: &TokenSequence, b: &TokenSequence, alpha: f64) -> Result<MetricScore, MetricError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MetricError::Parameter {
            metric: "meteor",
            message: format!("alpha must lie in [0, 1], got {alpha}"),
        });
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyInput("meteor"));
    }
    let (matches, chunks) = align(a.tokens(), b.tokens());
    Ok(MetricScore::similarity(
        "meteor",
        meteor_from_counts(matches, chunks, a.len(), b.len(), alpha),
    ))
}

pub(crate) fn meteor_from_counts(matches: usize, chunks: usize, len_a: usize, len_b: usize, alpha: f64) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let p = matches as f64 / len_a as f64;
    let r = matches as f64 / len_b as f64;
    let fmean = p * r / (alpha * p + (1.0 - alpha) * r);
    let frag = if matches <= 1 {
        0.0
    } else {
        (chunks - 1) as f64 / (matches - 1) as f64
    };
    fmean * (1.0 - GAMMA * frag.powf(BETA))
}

/// Returns `(matches, chunks)` of the best alignment.
fn align(a: &[String], b: &[String]) -> (usize, usize) {
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut class_of = |t: &String| {
        let n = classes.len();
        *classes.entry(stem(t)).or_insert(n)
    };
    let ca: Vec<usize> = a.iter().map(&mut class_of).collect();
    let cb: Vec<usize> = b.iter().map(&mut class_of).collect();
    let k = classes.len();

    let mut count_a = vec![0usize; k];
    let mut count_b = vec![0usize; k];
    ca.iter().for_each(|&c| count_a[c] += 1);
    cb.iter().for_each(|&c| count_b[c] += 1);
    let need: Vec<usize> = (0..k).map(|c| count_a[c].min(count_b[c])).collect();
    let matches: usize = need.iter().sum();
    if matches == 0 {
        return (0, 0);
    }

    // remaining_a[i][c]: a-tokens of class c at positions >= i
    let mut remaining_a = vec![vec![0usize; k]; a.len() + 1];
    for i in (0..a.len()).rev() {
        remaining_a[i] = remaining_a[i + 1].clone();
        remaining_a[i][ca[i]] += 1;
    }
    let mut b_by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, &c) in cb.iter().enumerate() {
        b_by_class[c].push(j);
    }

    let mut search = ChunkSearch {
        ca: &ca,
        b_by_class: &b_by_class,
        need: &need,
        remaining_a: &remaining_a,
        matched: vec![0; k],
        used_b: vec![false; b.len()],
        best_links: None,
        nodes: 0,
    };
    search.dfs(0, None, 0);
    let links = search.best_links.expect("a maximum matching always exists");
    (matches, matches - links)
}

/// Depth-first search over maximum matchings for the most adjacent links.
struct ChunkSearch<'a> {
    ca: &'a [usize],
    b_by_class: &'a [Vec<usize>],
    need: &'a [usize],
    remaining_a: &'a [Vec<usize>],
    matched: Vec<usize>,
    used_b: Vec<bool>,
    best_links: Option<usize>,
    nodes: usize,
}

impl ChunkSearch<'_> {
    /// `prev`: the b position matched to a[i - 1], if any.
    fn dfs(&mut self, i: usize, prev: Option<usize>, links: usize) {
        self.nodes += 1;
        if i == self.ca.len() {
            if self.best_links.is_none_or(|b| links > b) {
                self.best_links = Some(links);
            }
            return;
        }
        if self.best_links.is_some() && self.nodes > SEARCH_BUDGET {
            return;
        }
        // each remaining a position adds at most one link
        if self.best_links.is_some_and(|b| links + (self.ca.len() - i) <= b) {
            return;
        }
        let c = self.ca[i];
        if self.matched[c] < self.need[c] {
            let cont = prev.map(|p| p + 1);
            // try the chunk-continuing position first
            let mut order: Vec<usize> = self.b_by_class[c]
                .iter()
                .copied()
                .filter(|&j| !self.used_b[j])
                .collect();
            if let Some(pos) = cont.and_then(|cj| order.iter().position(|&j| j == cj)) {
                order[..=pos].rotate_right(1);
            }
            for j in order {
                self.used_b[j] = true;
                self.matched[c] += 1;
                let link = usize::from(cont == Some(j));
                self.dfs(i + 1, Some(j), links + link);
                self.matched[c] -= 1;
                self.used_b[j] = false;
            }
        }
        // leave a[i] unmatched only if the class can still be filled later
        if self.remaining_a[i + 1][c] >= self.need[c] - self.matched[c] {
            self.dfs(i + 1, None, links);
        }
    }
}
