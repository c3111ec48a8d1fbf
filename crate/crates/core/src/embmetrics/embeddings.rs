use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::corpus::{LabeledCorpus, PairId};
use crate::textmetrics::TokenSequence;

use super::EmbeddingError;

/// Static word vectors keyed by lowercased word.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f32>>,
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors. Keys are lowercased; the first
    /// vector wins when two keys collide after lowercasing.
    pub fn from_entries<I, S>(dimension: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        if dimension == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        let mut map = HashMap::new();
        for (word, vector) in entries {
            if vector.len() != dimension {
                return Err(EmbeddingError::DimensionMismatch {
                    expected: dimension,
                    found: vector.len(),
                });
            }
            map.entry(word.as_ref().to_lowercase())
                .or_insert_with(|| vector.iter().map(|&x| x as f32).collect());
        }
        Ok(EmbeddingTable { dimension, entries: map })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<Vec<f64>> {
        self.entries
            .get(word)
            .map(|v| v.iter().map(|&x| f64::from(x)).collect())
    }
}

fn is_count_header(fields: &[&str]) -> bool {
    fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok())
}

/// Reads the `word v1 ... vd` text format used by GloVe and fastText.
///
/// A first line of two integers (`count dim`) is treated as a header. Words
/// are lowercased to match the tokenizer, and only words in `vocab_filter`
/// are kept when one is given.
pub fn load_embeddings(path: &Path, vocab_filter: Option<&HashSet<String>>) -> Result<EmbeddingTable, EmbeddingError> {
    let io_err = |source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut dimension: Option<usize> = None;
    let mut entries: HashMap<String, Vec<f32>> = HashMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if line_no == 1 && is_count_header(&fields) {
            dimension = Some(fields[1].parse().expect("checked by is_count_header"));
            continue;
        }
        let found = fields.len() - 1;
        match dimension {
            None if found == 0 => {
                return Err(EmbeddingError::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: "word without vector".into(),
                })
            }
            None => dimension = Some(found),
            Some(expected) if expected != found => {
                return Err(EmbeddingError::LineDimension {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected,
                    found,
                })
            }
            Some(_) => {}
        }
        let word = fields[0].to_lowercase();
        if vocab_filter.is_some_and(|keep| !keep.contains(&word)) || entries.contains_key(&word) {
            continue;
        }
        let vector = fields[1..]
            .iter()
            .map(|f| f.parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbeddingError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
        entries.insert(word, vector);
    }
    let dimension = dimension.ok_or_else(|| EmbeddingError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "no vectors in file".into(),
    })?;
    if dimension == 0 {
        return Err(EmbeddingError::ZeroDimension);
    }
    Ok(EmbeddingTable { dimension, entries })
}

/// Mean of the in-vocabulary token vectors; OOV tokens are skipped.
pub fn sentence_vector(tokens: &TokenSequence, table: &EmbeddingTable) -> Result<Vec<f64>, EmbeddingError> {
    let mut sum = vec![0.0; table.dimension];
    let mut found = 0usize;
    for token in tokens.tokens() {
        if let Some(v) = table.entries.get(token) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += f64::from(x);
            }
            found += 1;
        }
    }
    if found == 0 {
        return Err(EmbeddingError::NoRepresentableTokens);
    }
    sum.iter_mut().for_each(|s| *s /= found as f64);
    Ok(sum)
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), EmbeddingError> {
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(())
}

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    check_dims(u, v)?;
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| (a / nu) * (b / nv)).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

pub fn l2_distance(u: &[f64], v: &[f64]) -> Result<f64, EmbeddingError> {
    check_dims(u, v)?;
    Ok(euclidean(u, v))
}

pub(crate) fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Externally computed sentence embeddings, one `(vec_a, vec_b)` per pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SentenceEmbeddings {
    pub vectors: BTreeMap<PairId, (Vec<f64>, Vec<f64>)>,
}

impl SentenceEmbeddings {
    pub fn get(&self, id: &PairId) -> Option<(&[f64], &[f64])> {
        self.vectors.get(id).map(|(a, b)| (a.as_slice(), b.as_slice()))
    }
}

fn parse_vector(field: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    field.split_whitespace().map(str::parse).collect()
}

/// Reads externally computed sentence embeddings from CSV.
///
/// Two layouts are accepted: one row per pair with header
/// `pair_id,vec_a,vec_b`, or one row per side with header
/// `pair_id,side,vector` where side is `a` or `b`. Vectors are
/// whitespace-separated numbers, all of one dimension, and every pair id must
/// exist in `corpus`. Pairs missing either side are left out.
pub fn load_sentence_embeddings(path: &Path, corpus: &LabeledCorpus) -> Result<SentenceEmbeddings, EmbeddingError> {
    let parse_err = |line: usize, message: String| EmbeddingError::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| parse_err(0, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let pair_col = column("pair_id").ok_or_else(|| parse_err(1, "missing pair_id column".into()))?;
    let layout = match (column("vec_a"), column("vec_b"), column("side"), column("vector")) {
        (Some(a), Some(b), _, _) => Layout::Wide(a, b),
        (_, _, Some(side), Some(vector)) => Layout::Long(side, vector),
        _ => return Err(parse_err(1, "expected columns vec_a,vec_b or side,vector".into())),
    };

    let mut halves: BTreeMap<PairId, (Option<Vec<f64>>, Option<Vec<f64>>)> = BTreeMap::new();
    let mut dimension: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| rec.get(i).ok_or_else(|| parse_err(line, format!("missing column {}", i + 1)));
        let id = PairId::from(field(pair_col)?.trim());
        if corpus.pair(&id).is_none() {
            return Err(parse_err(line, format!("unknown pair id {id}")));
        }
        let mut vectors: Vec<(bool, Vec<f64>)> = Vec::with_capacity(2);
        match layout {
            Layout::Wide(a, b) => {
                for (is_a, col) in [(true, a), (false, b)] {
                    vectors.push((is_a, parse_vector(field(col)?).map_err(|e| parse_err(line, e.to_string()))?));
                }
            }
            Layout::Long(side, vector) => {
                let is_a = match field(side)?.trim() {
                    "a" | "A" => true,
                    "b" | "B" => false,
                    other => return Err(parse_err(line, format!("side must be a or b, got {other:?}"))),
                };
                vectors.push((is_a, parse_vector(field(vector)?).map_err(|e| parse_err(line, e.to_string()))?));
            }
        }
        let slot = halves.entry(id).or_default();
        for (is_a, v) in vectors {
            let expected = *dimension.get_or_insert(v.len());
            if v.len() != expected || v.is_empty() {
                return Err(EmbeddingError::LineDimension {
                    path: PathBuf::from(path),
                    line,
                    expected,
                    found: v.len(),
                });
            }
            let target = if is_a { &mut slot.0 } else { &mut slot.1 };
            if target.replace(v).is_some() {
                return Err(parse_err(line, "duplicate vector for pair side".into()));
            }
        }
    }
    let vectors = halves
        .into_iter()
        .filter_map(|(id, (a, b))| Some((id, (a?, b?))))
        .collect();
    Ok(SentenceEmbeddings { vectors })
}

#[derive(Clone, Copy)]
enum Layout {
    Wide(usize, usize),
    Long(usize, usize),
}
