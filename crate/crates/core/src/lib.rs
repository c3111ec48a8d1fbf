//! Annotator-quality analysis for crowd-sourced sentence-similarity labels.
//!
//! The crate loads a labeled corpus of sentence pairs, profiles each
//! annotator, flags unreliable ones with five heuristics, scores the pairs
//! with lexical and embedding metrics and measures how metric/label
//! correlation changes when flagged annotators are filtered out.

pub mod corpus;
pub mod embmetrics;
pub mod heuristics;
pub mod sentiment;
pub mod stats;
pub mod textmetrics;
pub mod correlate;
pub mod scoring;
pub mod simulate;
pub mod cli;
