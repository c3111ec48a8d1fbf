//! Embedding-backed metrics: pooled-vector cosine and L2, Word Mover's
//! Distance over an optimal-transport solver, and noun-embedding distance.

use std::path::PathBuf;

use thiserror::Error;

use crate::textmetrics::{MetricScore, Orientation};

mod embeddings;
mod pos;
pub mod transport;
mod wmd;

pub use embeddings::{
    cosine_similarity, l2_distance, load_embeddings, load_sentence_embeddings, sentence_vector, EmbeddingTable,
    SentenceEmbeddings,
};
pub use pos::{min_cost_assignment, pos_distance, GoldNounTags, LexiconNounTagger, NounTagger, PosAggregation, Side};
pub use transport::{solve_transport, TransportError, TransportMethod, TransportProblem, TransportSolution};
pub use wmd::wmd;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}, line {line}: expected {expected} values, found {found}")]
    LineDimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("vector dimensions differ: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no representable tokens")]
    NoRepresentableTokens,
    #[error("cosine of a zero vector")]
    ZeroVector,
    #[error("noun tagger: {0}")]
    Tagger(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Score oriented so that larger always means more similar.
pub fn orient(score: &MetricScore) -> f64 {
    match score.orientation {
        Orientation::Similarity => score.value,
        Orientation::Distance => -score.value,
    }
}
