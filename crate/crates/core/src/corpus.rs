//! Annotated sentence-pair corpus: data model, loading and validation.
//!
//! A corpus is two tables, pairs and annotations, stored either as CSV
//! (header required) or JSON lines. Text is kept verbatim; any normalization
//! happens in the tokenizers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub String);

/// Identifier of an annotator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnnotatorId(pub String);

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for AnnotatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PairId {
    fn from(s: &str) -> Self {
        PairId(s.to_string())
    }
}

impl From<&str> for AnnotatorId {
    fn from(s: &str) -> Self {
        AnnotatorId(s.to_string())
    }
}

/// A 1–5 similarity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Label(u8);

impl Label {
    pub fn new(value: i64) -> Result<Self, LabelOutOfRange> {
        if (1..=5).contains(&value) {
            Ok(Label(value as u8))
        } else {
            Err(LabelOutOfRange(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl TryFrom<i64> for Label {
    type Error = LabelOutOfRange;
    fn try_from(v: i64) -> Result<Self, Self::Error> {
        Label::new(v)
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        i64::from(l.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("label out of range {{1..5}}: {0}")]
pub struct LabelOutOfRange(pub i64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub pair_id: PairId,
    pub source: String,
    pub is_random: bool,
    pub text_a: String,
    pub text_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub pair_id: PairId,
    pub annotator_id: AnnotatorId,
    pub label: Label,
    /// Seconds spent labeling this pair.
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guess from a file extension; anything that is not `.jsonl`/`.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") | Some("ndjson") => Format::Jsonl,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: u64,
        message: String,
    },
    #[error("{path}, row {row}: {source}")]
    Label {
        path: PathBuf,
        row: u64,
        #[source]
        source: LabelOutOfRange,
    },
    #[error("duplicate pair id {0}")]
    DuplicatePair(PairId),
    #[error("pair {0}: text must be non-empty")]
    EmptyText(PairId),
    #[error("annotation for ({pair}, {annotator}) appears more than once")]
    DuplicateAnnotation { pair: PairId, annotator: AnnotatorId },
    #[error("annotation references unknown pair {0}")]
    DanglingPair(PairId),
    #[error("annotation ({pair}, {annotator}): duration must be finite and non-negative, got {duration}")]
    BadDuration {
        pair: PairId,
        annotator: AnnotatorId,
        duration: f64,
    },
    #[error("precomputed scores reference unknown pair {0}")]
    UnknownPair(PairId),
    #[error("precomputed channel {0:?} already attached")]
    ChannelCollision(String),
}

/// Externally computed per-pair scores, keyed by metric name then pair.
pub type PrecomputedScores = BTreeMap<String, BTreeMap<PairId, f64>>;

/// A validated, immutable annotated corpus.
///
/// Cloning is cheap: the tables are shared.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    inner: Arc<Inner>,
    precomputed: Arc<PrecomputedScores>,
}

#[derive(Debug)]
struct Inner {
    pairs: Vec<SentencePair>,
    annotations: Vec<Annotation>,
    pair_index: HashMap<PairId, usize>,
    by_pair: Vec<Vec<usize>>,
    by_annotator: BTreeMap<AnnotatorId, Vec<usize>>,
}

impl LabeledCorpus {
    /// Validate the tables and build the corpus.
    pub fn new(pairs: Vec<SentencePair>, annotations: Vec<Annotation>) -> Result<Self, CorpusError> {
        let mut pair_index = HashMap::with_capacity(pairs.len());
        for (i, p) in pairs.iter().enumerate() {
            if p.text_a.trim().is_empty() || p.text_b.trim().is_empty() {
                return Err(CorpusError::EmptyText(p.pair_id.clone()));
            }
            if pair_index.insert(p.pair_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicatePair(p.pair_id.clone()));
            }
        }
        let mut by_pair = vec![Vec::new(); pairs.len()];
        let mut by_annotator: BTreeMap<AnnotatorId, Vec<usize>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (k, a) in annotations.iter().enumerate() {
            let Some(&pi) = pair_index.get(&a.pair_id) else {
                return Err(CorpusError::DanglingPair(a.pair_id.clone()));
            };
            if !(a.duration.is_finite() && a.duration >= 0.0) {
                return Err(CorpusError::BadDuration {
                    pair: a.pair_id.clone(),
                    annotator: a.annotator_id.clone(),
                    duration: a.duration,
                });
            }
            if !seen.insert((pi, a.annotator_id.clone())) {
                return Err(CorpusError::DuplicateAnnotation {
                    pair: a.pair_id.clone(),
                    annotator: a.annotator_id.clone(),
                });
            }
            by_pair[pi].push(k);
            by_annotator.entry(a.annotator_id.clone()).or_default().push(k);
        }
        Ok(LabeledCorpus {
            inner: Arc::new(Inner {
                pairs,
                annotations,
                pair_index,
                by_pair,
                by_annotator,
            }),
            precomputed: Arc::new(BTreeMap::new()),
        })
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.inner.pairs
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.inner.annotations
    }

    pub fn pair(&self, id: &PairId) -> Option<&SentencePair> {
        self.pair_index(id).map(|i| &self.inner.pairs[i])
    }

    pub fn pair_index(&self, id: &PairId) -> Option<usize> {
        self.inner.pair_index.get(id).copied()
    }

    /// Annotations on the pair at `pair_idx`, in file order.
    pub fn annotations_for_pair(&self, pair_idx: usize) -> impl Iterator<Item = &Annotation> {
        self.inner.by_pair[pair_idx]
            .iter()
            .map(move |&k| &self.inner.annotations[k])
    }

    pub fn annotations_by(&self, annotator: &AnnotatorId) -> impl Iterator<Item = &Annotation> {
        self.inner
            .by_annotator
            .get(annotator)
            .into_iter()
            .flatten()
            .map(move |&k| &self.inner.annotations[k])
    }

    /// Annotator ids in sorted order.
    pub fn annotators(&self) -> impl Iterator<Item = &AnnotatorId> {
        self.inner.by_annotator.keys()
    }

    pub fn has_annotator(&self, id: &AnnotatorId) -> bool {
        self.inner.by_annotator.contains_key(id)
    }

    pub fn precomputed(&self) -> &PrecomputedScores {
        &self.precomputed
    }

    pub fn precomputed_channel(&self, name: &str) -> Option<&BTreeMap<PairId, f64>> {
        self.precomputed.get(name)
    }

    /// Returns a new corpus value carrying an extra score channel.
    pub fn attach_precomputed(
        &self,
        metric_name: &str,
        scores: BTreeMap<PairId, f64>,
    ) -> Result<LabeledCorpus, CorpusError> {
        if self.precomputed.contains_key(metric_name) {
            return Err(CorpusError::ChannelCollision(metric_name.to_string()));
        }
        if let Some(unknown) = scores.keys().find(|id| !self.inner.pair_index.contains_key(*id)) {
            return Err(CorpusError::UnknownPair(unknown.clone()));
        }
        let mut channels = (*self.precomputed).clone();
        channels.insert(metric_name.to_string(), scores);
        Ok(LabeledCorpus {
            inner: Arc::clone(&self.inner),
            precomputed: Arc::new(channels),
        })
    }

    /// Copy of this corpus keeping only annotations accepted by `keep`.
    /// Pairs and precomputed channels are retained.
    pub fn retain_annotations(&self, mut keep: impl FnMut(&Annotation) -> bool) -> LabeledCorpus {
        let annotations: Vec<Annotation> = self
            .inner
            .annotations
            .iter()
            .filter(|a| keep(a))
            .cloned()
            .collect();
        let mut out = LabeledCorpus::new(self.inner.pairs.clone(), annotations)
            .expect("subset of a valid corpus is valid");
        out.precomputed = Arc::clone(&self.precomputed);
        out
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct PairRecord {
    pair_id: String,
    source: String,
    is_random: Flag,
    text_a: String,
    text_b: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct AnnotationRecord {
    pair_id: String,
    annotator_id: String,
    label: serde_json::Value,
    duration_seconds: f64,
}

/// Boolean accepted as `0`/`1`, `true`/`false`.
#[derive(Debug, Clone, Copy)]
struct Flag(bool);

impl<'de> Deserialize<'de> for Flag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bool(bool),
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Bool(b) => Ok(Flag(b)),
            Raw::Int(0) => Ok(Flag(false)),
            Raw::Int(1) => Ok(Flag(true)),
            Raw::Str(s) => match s.trim() {
                "0" | "false" => Ok(Flag(false)),
                "1" | "true" => Ok(Flag(true)),
                other => Err(serde::de::Error::custom(format!("is_random must be 0 or 1, got {other:?}"))),
            },
            Raw::Int(other) => Err(serde::de::Error::custom(format!("is_random must be 0 or 1, got {other}"))),
        }
    }
}

impl Serialize for Flag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(self.0))
    }
}

fn parse_label(raw: &serde_json::Value) -> Result<i64, String> {
    match raw {
        serde_json::Value::Number(n) => n
            .as_i64()
            .ok_or_else(|| format!("label must be an integer, got {n}")),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("label must be an integer, got {s:?}")),
        other => Err(format!("label must be an integer, got {other}")),
    }
}

fn read_records<T: serde::de::DeserializeOwned>(
    path: &Path,
    format: Format,
) -> Result<Vec<(u64, T)>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .from_reader(BufReader::new(file));
            let headers = rdr.headers().cloned().map_err(|e| CorpusError::Parse {
                path: path.to_path_buf(),
                row: 1,
                message: e.to_string(),
            })?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| CorpusError::Parse {
                    path: path.to_path_buf(),
                    row: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                })?;
                let row = rec.position().map_or(0, |p| p.line());
                let value: T = rec.deserialize(Some(&headers)).map_err(|e| CorpusError::Parse {
                    path: path.to_path_buf(),
                    row,
                    message: e.to_string(),
                })?;
                out.push((row, value));
            }
        }
        Format::Jsonl => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err)?;
                let row = i as u64 + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let value: T = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                    path: path.to_path_buf(),
                    row,
                    message: e.to_string(),
                })?;
                out.push((row, value));
            }
        }
    }
    Ok(out)
}

/// Load and validate a corpus from its pairs and annotations files.
pub fn load_corpus(
    pairs_path: &Path,
    annotations_path: &Path,
    format: Format,
) -> Result<LabeledCorpus, CorpusError> {
    let pairs = read_records::<PairRecord>(pairs_path, format)?
        .into_iter()
        .map(|(_, r)| SentencePair {
            pair_id: PairId(r.pair_id),
            source: r.source,
            is_random: r.is_random.0,
            text_a: r.text_a,
            text_b: r.text_b,
        })
        .collect();
    let mut annotations = Vec::new();
    for (row, r) in read_records::<AnnotationRecord>(annotations_path, format)? {
        let raw = parse_label(&r.label).map_err(|message| CorpusError::Parse {
            path: annotations_path.to_path_buf(),
            row,
            message,
        })?;
        let label = Label::new(raw).map_err(|source| CorpusError::Label {
            path: annotations_path.to_path_buf(),
            row,
            source,
        })?;
        annotations.push(Annotation {
            pair_id: PairId(r.pair_id),
            annotator_id: AnnotatorId(r.annotator_id),
            label,
            duration: r.duration_seconds,
        });
    }
    LabeledCorpus::new(pairs, annotations)
}

/// Write the corpus tables in the same schema `load_corpus` reads.
pub fn write_corpus(
    corpus: &LabeledCorpus,
    pairs_path: &Path,
    annotations_path: &Path,
    format: Format,
) -> Result<(), CorpusError> {
    let pair_rows: Vec<PairRecord> = corpus
        .pairs()
        .iter()
        .map(|p| PairRecord {
            pair_id: p.pair_id.0.clone(),
            source: p.source.clone(),
            is_random: Flag(p.is_random),
            text_a: p.text_a.clone(),
            text_b: p.text_b.clone(),
        })
        .collect();
    let ann_rows: Vec<AnnotationRecord> = corpus
        .annotations()
        .iter()
        .map(|a| AnnotationRecord {
            pair_id: a.pair_id.0.clone(),
            annotator_id: a.annotator_id.0.clone(),
            label: serde_json::Value::from(i64::from(a.label)),
            duration_seconds: a.duration,
        })
        .collect();
    write_records(pairs_path, format, &pair_rows)?;
    write_records(annotations_path, format, &ann_rows)
}

fn write_records<T: Serialize>(path: &Path, format: Format, rows: &[T]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for r in rows {
                w.serialize(r).map_err(|e| io_err(e.into()))?;
            }
            w.flush().map_err(io_err)?;
        }
        Format::Jsonl => {
            let mut w = std::io::BufWriter::new(file);
            for r in rows {
                serde_json::to_writer(&mut w, r).map_err(|e| io_err(e.into()))?;
                w.write_all(b"\n").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

/// Read a `pair_id,score` CSV into a score map.
pub fn read_score_file(path: &Path) -> Result<BTreeMap<PairId, f64>, CorpusError> {
    #[derive(Deserialize)]
    struct Row {
        pair_id: String,
        score: f64,
    }
    let mut out = BTreeMap::new();
    for (row, r) in read_records::<Row>(path, Format::Csv)? {
        if !r.score.is_finite() {
            return Err(CorpusError::Parse {
                path: path.to_path_buf(),
                row,
                message: format!("score must be finite, got {}", r.score),
            });
        }
        out.insert(PairId(r.pair_id), r.score);
    }
    Ok(out)
}
