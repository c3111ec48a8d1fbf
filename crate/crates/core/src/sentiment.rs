//! Sentence sentiment in [-1, 1], used by the sentiment-disalignment heuristic.
//!
//! The built-in scorer sums lexicon valences with negation and intensifier
//! handling and squashes the sum with `x / (1 + |x|)`. Scores produced by an
//! external pipeline can be ingested instead.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::corpus::{LabeledCorpus, PairId, SentencePair};
use crate::textmetrics::tokenize;

const DEFAULT_LEXICON: &str = include_str!("../data/sentiment_lexicon.csv");

const NEGATORS: &[&str] = &[
    "not", "no", "never", "none", "nobody", "nothing", "neither", "nor", "nowhere", "without", "hardly",
    "barely", "cannot", "can't", "don't", "doesn't", "didn't", "isn't", "aren't", "wasn't", "weren't",
    "won't", "wouldn't", "shouldn't", "couldn't", "haven't", "hasn't", "hadn't", "ain't",
];

const INTENSIFIERS: &[(&str, f64)] = &[
    ("very", 1.5),
    ("really", 1.5),
    ("extremely", 2.0),
    ("incredibly", 2.0),
    ("absolutely", 2.0),
    ("totally", 1.5),
    ("so", 1.3),
    ("super", 1.5),
    ("quite", 1.2),
    ("pretty", 1.2),
    ("highly", 1.5),
    ("most", 1.3),
    ("slightly", 0.5),
    ("somewhat", 0.7),
    ("barely", 0.5),
];

/// Tokens before a valence word that are checked for a negator.
const NEGATION_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum SentimentError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Parse { path: PathBuf, row: u64, message: String },
    #[error("{path}, row {row}: score {value} outside [-1, 1]")]
    OutOfRange { path: PathBuf, row: u64, value: f64 },
    #[error("{path}, row {row}: unknown pair {pair}")]
    UnknownPair { path: PathBuf, row: u64, pair: PairId },
    #[error("lexicon entry {word:?}: {message}")]
    Lexicon { word: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    entries: HashMap<String, f64>,
    negators: HashSet<String>,
    intensifiers: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new(
        entries: HashMap<String, f64>,
        negators: HashSet<String>,
        intensifiers: HashMap<String, f64>,
    ) -> Result<Self, SentimentError> {
        for (w, &v) in &entries {
            if !(-1.0..=1.0).contains(&v) {
                return Err(SentimentError::Lexicon {
                    word: w.clone(),
                    message: format!("valence {v} outside [-1, 1]"),
                });
            }
        }
        for (w, &m) in &intensifiers {
            if !(m > 0.0 && m.is_finite()) {
                return Err(SentimentError::Lexicon {
                    word: w.clone(),
                    message: format!("multiplier {m} must be positive"),
                });
            }
        }
        Ok(SentimentLexicon {
            entries,
            negators,
            intensifiers,
        })
    }

    /// The bundled English lexicon.
    pub fn bundled() -> Self {
        Self::from_csv_str(DEFAULT_LEXICON, Path::new("<bundled>")).expect("bundled lexicon is valid")
    }

    /// Load a `word,valence` CSV with the default negators and intensifiers.
    pub fn from_file(path: &Path) -> Result<Self, SentimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| SentimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_str(&text, path)
    }

    fn from_csv_str(text: &str, path: &Path) -> Result<Self, SentimentError> {
        #[derive(Deserialize)]
        struct Row {
            word: String,
            valence: f64,
        }
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut entries = HashMap::new();
        for rec in rdr.deserialize::<Row>() {
            let row = rec.map_err(|e| SentimentError::Parse {
                path: path.to_path_buf(),
                row: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            entries.insert(row.word.to_lowercase(), row.valence);
        }
        let negators = NEGATORS.iter().map(|s| s.to_string()).collect();
        let intensifiers = INTENSIFIERS.iter().map(|&(w, m)| (w.to_string(), m)).collect();
        Self::new(entries, negators, intensifiers)
    }

    /// The same lexicon with every valence negated.
    pub fn negated(&self) -> Self {
        SentimentLexicon {
            entries: self.entries.iter().map(|(w, v)| (w.clone(), -v)).collect(),
            ..self.clone()
        }
    }

    pub fn valence(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }
}

/// Lexicon sentiment of a text, in [-1, 1].
pub fn sentiment_score(text: &str, lexicon: &SentimentLexicon) -> f64 {
    let tokens = tokenize(text);
    let toks = tokens.tokens();
    let mut total = 0.0;
    for (i, tok) in toks.iter().enumerate() {
        let Some(mut v) = lexicon.valence(tok) else {
            continue;
        };
        if i > 0 {
            if let Some(m) = lexicon.intensifiers.get(&toks[i - 1]) {
                v *= m;
            }
        }
        let window = &toks[i.saturating_sub(NEGATION_WINDOW)..i];
        if window.iter().any(|w| lexicon.negators.contains(w)) {
            v = -v;
        }
        total += v;
    }
    (total / (1.0 + total.abs())).clamp(-1.0, 1.0)
}

/// Sentiment of both sides of a pair.
pub trait SentimentScorer: Sync {
    fn sentiment(&self, pair: &SentencePair) -> (f64, f64);
}

impl SentimentScorer for SentimentLexicon {
    fn sentiment(&self, pair: &SentencePair) -> (f64, f64) {
        (sentiment_score(&pair.text_a, self), sentiment_score(&pair.text_b, self))
    }
}

/// Same sentiment for every pair. Useful to disable heuristic 5 probing.
#[derive(Debug, Clone, Copy)]
pub struct FixedSentiment(pub f64, pub f64);

impl SentimentScorer for FixedSentiment {
    fn sentiment(&self, _: &SentencePair) -> (f64, f64) {
        (self.0, self.1)
    }
}

/// Externally computed scores, falling back to a lexicon for pairs not covered.
#[derive(Debug, Clone)]
pub struct IngestedSentiment {
    pub scores: BTreeMap<PairId, (f64, f64)>,
    pub fallback: SentimentLexicon,
}

impl SentimentScorer for IngestedSentiment {
    fn sentiment(&self, pair: &SentencePair) -> (f64, f64) {
        match self.scores.get(&pair.pair_id) {
            Some(&s) => s,
            None => self.fallback.sentiment(pair),
        }
    }
}

/// Read a `pair_id,score_a,score_b` CSV, checking bounds and pair ids.
pub fn ingest_sentiment(path: &Path, corpus: &LabeledCorpus) -> Result<BTreeMap<PairId, (f64, f64)>, SentimentError> {
    #[derive(Deserialize)]
    struct Row {
        pair_id: String,
        score_a: f64,
        score_b: f64,
    }
    let file = std::fs::File::open(path).map_err(|source| SentimentError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(std::io::BufReader::new(file));
    let headers = rdr.headers().cloned().map_err(|e| SentimentError::Parse {
        path: path.to_path_buf(),
        row: 1,
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let parse_err = |e: csv::Error| SentimentError::Parse {
            path: path.to_path_buf(),
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let rec = rec.map_err(parse_err)?;
        let row = rec.position().map_or(0, |p| p.line());
        let r: Row = rec.deserialize(Some(&headers)).map_err(|e| SentimentError::Parse {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        for value in [r.score_a, r.score_b] {
            if !(-1.0..=1.0).contains(&value) {
                return Err(SentimentError::OutOfRange {
                    path: path.to_path_buf(),
                    row,
                    value,
                });
            }
        }
        let pair = PairId(r.pair_id);
        if corpus.pair_index(&pair).is_none() {
            return Err(SentimentError::UnknownPair {
                path: path.to_path_buf(),
                row,
                pair,
            });
        }
        out.insert(pair, (r.score_a, r.score_b));
    }
    Ok(out)
}
