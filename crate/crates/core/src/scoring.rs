//! Per-pair metric scoring over a whole corpus.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{LabeledCorpus, PairId, SentencePair};
use crate::embmetrics::{
    self, cosine_similarity, l2_distance, pos_distance, sentence_vector, wmd, EmbeddingError, EmbeddingTable,
    LexiconNounTagger, NounTagger, PosAggregation, SentenceEmbeddings, TransportMethod,
};
use crate::textmetrics::{
    bleu, chrf, meteor_lite, rouge_l, rouge_n, tokenize, word_overlap_with, MetricError, MetricScore, Orientation,
    OverlapMode, Smoothing, TokenSequence,
};

/// A natively computed metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Rouge1,
    Bleu1,
    RougeL,
    WordOverlap,
    Chrf,
    Rouge2,
    Meteor,
    Bleu,
    L2,
    FasttextCosine,
    Wmd,
    GloveCosine,
    PosDistance,
}

impl MetricKind {
    pub const LEXICAL: [MetricKind; 8] = [
        MetricKind::Rouge1,
        MetricKind::Bleu1,
        MetricKind::RougeL,
        MetricKind::WordOverlap,
        MetricKind::Chrf,
        MetricKind::Rouge2,
        MetricKind::Meteor,
        MetricKind::Bleu,
    ];

    pub const EMBEDDING: [MetricKind; 5] = [
        MetricKind::L2,
        MetricKind::FasttextCosine,
        MetricKind::Wmd,
        MetricKind::GloveCosine,
        MetricKind::PosDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Rouge1 => "ROUGE-1",
            MetricKind::Bleu1 => "bleu1",
            MetricKind::RougeL => "ROUGE-l",
            MetricKind::WordOverlap => "1-gram_overlap",
            MetricKind::Chrf => "chrfScore",
            MetricKind::Rouge2 => "ROUGE-2",
            MetricKind::Meteor => "meteor",
            MetricKind::Bleu => "bleu",
            MetricKind::L2 => "L2_score",
            MetricKind::FasttextCosine => "fasttext_cosine",
            MetricKind::Wmd => "WMD",
            MetricKind::GloveCosine => "glove_cosine",
            MetricKind::PosDistance => "POS_dist_score",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricKind::L2 | MetricKind::Wmd | MetricKind::PosDistance => Orientation::Distance,
            _ => Orientation::Similarity,
        }
    }

    pub fn is_lexical(self) -> bool {
        MetricKind::LEXICAL.contains(&self)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown metric {0:?} (use lexical, embedding, all or metric names)")]
pub struct UnknownMetric(pub String);

impl FromStr for MetricKind {
    type Err = UnknownMetric;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_lowercase().replace(['-', ' '], "_");
        MetricKind::LEXICAL
            .into_iter()
            .chain(MetricKind::EMBEDDING)
            .find(|k| k.name().to_lowercase().replace('-', "_") == wanted)
            .ok_or_else(|| UnknownMetric(s.to_string()))
    }
}

/// Parses `lexical`, `embedding`, `all` or a comma list of metric names.
pub fn parse_metric_set(spec: &str) -> Result<Vec<MetricKind>, UnknownMetric> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kinds: Vec<MetricKind> = match part.to_lowercase().as_str() {
            "lexical" => MetricKind::LEXICAL.to_vec(),
            "embedding" => MetricKind::EMBEDDING.to_vec(),
            "all" => MetricKind::LEXICAL.into_iter().chain(MetricKind::EMBEDDING).collect(),
            _ => vec![part.parse()?],
        };
        for k in kinds {
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    if out.is_empty() {
        return Err(UnknownMetric(spec.to_string()));
    }
    Ok(out)
}

/// Tunable metric parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub overlap_mode: OverlapMode,
    pub chrf_order: usize,
    pub chrf_beta: f64,
    pub meteor_alpha: f64,
    pub transport: TransportMethod,
    pub pos_aggregation: PosAggregation,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            overlap_mode: OverlapMode::Jaccard,
            chrf_order: 6,
            chrf_beta: 2.0,
            meteor_alpha: 0.9,
            transport: TransportMethod::Exact,
            pos_aggregation: PosAggregation::Matching,
        }
    }
}

/// External inputs needed by the embedding metrics.
pub struct EmbeddingResources {
    pub glove: Option<EmbeddingTable>,
    pub fasttext: Option<EmbeddingTable>,
    pub sentence_embeddings: Option<SentenceEmbeddings>,
    pub tagger: Box<dyn NounTagger>,
}

impl Default for EmbeddingResources {
    fn default() -> Self {
        EmbeddingResources {
            glove: None,
            fasttext: None,
            sentence_embeddings: None,
            tagger: Box::new(LexiconNounTagger::bundled()),
        }
    }
}

impl EmbeddingResources {
    /// Static table used by WMD, POS distance and the pooled L2 fallback.
    fn word_table(&self) -> Option<&EmbeddingTable> {
        self.glove.as_ref().or(self.fasttext.as_ref())
    }

    /// Why `kind` cannot be computed with these resources, if it cannot.
    pub fn missing_for(&self, kind: MetricKind) -> Option<&'static str> {
        match kind {
            MetricKind::GloveCosine if self.glove.is_none() => Some("no GloVe vectors given"),
            MetricKind::FasttextCosine if self.fasttext.is_none() => Some("no fastText vectors given"),
            MetricKind::Wmd | MetricKind::PosDistance if self.word_table().is_none() => {
                Some("no word vectors given")
            }
            MetricKind::L2 if self.sentence_embeddings.is_none() && self.word_table().is_none() => {
                Some("no sentence embeddings or word vectors given")
            }
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("{metric} on pair {pair}: {source}")]
    Embedding {
        metric: &'static str,
        pair: PairId,
        #[source]
        source: EmbeddingError,
    },
    #[error("{metric} on pair {pair}: {source}")]
    Metric {
        metric: &'static str,
        pair: PairId,
        #[source]
        source: MetricError,
    },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// One metric's oriented-or-raw scores, one slot per corpus pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricColumn {
    pub name: String,
    pub orientation: Orientation,
    /// Raw metric values; `None` where the metric is undefined for the pair.
    pub values: Vec<Option<f64>>,
}

impl MetricColumn {
    pub fn undefined(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Value with distances negated, so larger means more similar.
    pub fn oriented(&self, idx: usize) -> Option<f64> {
        self.values[idx].map(|v| {
            embmetrics::orient(&MetricScore {
                metric_name: String::new(),
                value: v,
                orientation: self.orientation,
                precision: None,
                recall: None,
            })
        })
    }
}

/// Scores of every pair under every metric, in corpus pair order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix {
    pub pair_ids: Vec<PairId>,
    pub columns: Vec<MetricColumn>,
}

impl ScoreMatrix {
    pub fn column(&self, name: &str) -> Option<&MetricColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Adds a column from a per-pair map; pairs missing from the map are undefined.
    pub fn push_channel(
        &mut self,
        name: &str,
        orientation: Orientation,
        scores: &std::collections::BTreeMap<PairId, f64>,
    ) {
        let values = self.pair_ids.iter().map(|id| scores.get(id).copied()).collect();
        self.columns.push(MetricColumn {
            name: name.to_string(),
            orientation,
            values,
        });
    }
}

struct PairContext<'a> {
    pair: &'a SentencePair,
    a: TokenSequence,
    b: TokenSequence,
}

fn undefined_metric(r: Result<MetricScore, MetricError>, kind: MetricKind, pair: &PairId) -> Result<Option<f64>, ScoringError> {
    match r {
        Ok(s) => Ok(Some(s.value)),
        Err(MetricError::EmptyInput(_)) => Ok(None),
        Err(source) => Err(ScoringError::Metric {
            metric: kind.name(),
            pair: pair.clone(),
            source,
        }),
    }
}

fn undefined_embedding(r: Result<f64, EmbeddingError>, kind: MetricKind, pair: &PairId) -> Result<Option<f64>, ScoringError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(EmbeddingError::NoRepresentableTokens | EmbeddingError::ZeroVector) => Ok(None),
        Err(source) => Err(ScoringError::Embedding {
            metric: kind.name(),
            pair: pair.clone(),
            source,
        }),
    }
}

fn score_one(
    kind: MetricKind,
    ctx: &PairContext<'_>,
    res: &EmbeddingResources,
    opts: &MetricOptions,
) -> Result<Option<f64>, ScoringError> {
    let (a, b, id) = (&ctx.a, &ctx.b, &ctx.pair.pair_id);
    let cosine = |table: &EmbeddingTable| -> Result<f64, EmbeddingError> {
        cosine_similarity(&sentence_vector(a, table)?, &sentence_vector(b, table)?)
    };
    match kind {
        MetricKind::Rouge1 => undefined_metric(rouge_n(a, b, 1), kind, id),
        MetricKind::Rouge2 => undefined_metric(rouge_n(a, b, 2), kind, id),
        MetricKind::RougeL => undefined_metric(rouge_l(a, b), kind, id),
        MetricKind::Bleu => undefined_metric(bleu(a, b, 4, Smoothing::AddOne), kind, id),
        MetricKind::Bleu1 => undefined_metric(bleu(a, b, 1, Smoothing::None), kind, id),
        MetricKind::WordOverlap => undefined_metric(word_overlap_with(a, b, opts.overlap_mode), kind, id),
        MetricKind::Chrf => undefined_metric(
            chrf(&ctx.pair.text_a, &ctx.pair.text_b, opts.chrf_order, opts.chrf_beta),
            kind,
            id,
        ),
        MetricKind::Meteor => undefined_metric(meteor_lite(a, b, opts.meteor_alpha), kind, id),
        MetricKind::GloveCosine => match &res.glove {
            Some(t) => undefined_embedding(cosine(t), kind, id),
            None => Ok(None),
        },
        MetricKind::FasttextCosine => match &res.fasttext {
            Some(t) => undefined_embedding(cosine(t), kind, id),
            None => Ok(None),
        },
        MetricKind::L2 => {
            if let Some(emb) = &res.sentence_embeddings {
                return match emb.get(id) {
                    Some((va, vb)) => undefined_embedding(l2_distance(va, vb), kind, id),
                    None => Ok(None),
                };
            }
            match res.word_table() {
                Some(t) => undefined_embedding(
                    sentence_vector(a, t).and_then(|va| l2_distance(&va, &sentence_vector(b, t)?)),
                    kind,
                    id,
                ),
                None => Ok(None),
            }
        }
        MetricKind::Wmd => match res.word_table() {
            Some(t) => undefined_embedding(wmd(a, b, t, opts.transport).map(|s| s.value), kind, id),
            None => Ok(None),
        },
        MetricKind::PosDistance => match res.word_table() {
            Some(t) => match pos_distance(id, a, b, res.tagger.as_ref(), t, opts.pos_aggregation) {
                Ok(score) => Ok(score.map(|s| s.value)),
                Err(e) => undefined_embedding(Err(e), kind, id),
            },
            None => Ok(None),
        },
    }
}

/// Scores every pair of `corpus` with each metric in `metrics`.
///
/// Metrics whose resources are absent are skipped and reported in the
/// returned warnings. Precomputed channels attached to the corpus are
/// appended as similarity-oriented columns. `jobs` caps the worker threads;
/// the result does not depend on it.
pub fn score_corpus(
    corpus: &LabeledCorpus,
    metrics: &[MetricKind],
    resources: &EmbeddingResources,
    options: &MetricOptions,
    jobs: Option<usize>,
) -> Result<(ScoreMatrix, Vec<String>), ScoringError> {
    let mut warnings = Vec::new();
    let active: Vec<MetricKind> = metrics
        .iter()
        .copied()
        .filter(|&k| match resources.missing_for(k) {
            Some(why) => {
                warnings.push(format!("skipping {}: {why}", k.name()));
                false
            }
            None => true,
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| ScoringError::Pool(e.to_string()))?;
    let rows: Vec<Vec<Option<f64>>> = pool.install(|| {
        corpus
            .pairs()
            .par_iter()
            .map(|pair| {
                let ctx = PairContext {
                    pair,
                    a: tokenize(&pair.text_a),
                    b: tokenize(&pair.text_b),
                };
                active
                    .iter()
                    .map(|&k| score_one(k, &ctx, resources, options))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut matrix = ScoreMatrix {
        pair_ids: corpus.pairs().iter().map(|p| p.pair_id.clone()).collect(),
        columns: active
            .iter()
            .enumerate()
            .map(|(c, k)| MetricColumn {
                name: k.name().to_string(),
                orientation: k.orientation(),
                values: rows.iter().map(|r| r[c]).collect(),
            })
            .collect(),
    };
    for (name, scores) in corpus.precomputed() {
        matrix.push_channel(name, Orientation::Similarity, scores);
    }
    Ok((matrix, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Annotation, Label};

    fn corpus(texts: &[(&str, &str)]) -> LabeledCorpus {
        let pairs = texts
            .iter()
            .enumerate()
            .map(|(i, (a, b))| SentencePair {
                pair_id: PairId(format!("p{i}")),
                source: "s".into(),
                is_random: false,
                text_a: a.to_string(),
                text_b: b.to_string(),
            })
            .collect::<Vec<_>>();
        let anns = pairs
            .iter()
            .map(|p| Annotation {
                pair_id: p.pair_id.clone(),
                annotator_id: "x".into(),
                label: Label::new(3).unwrap(),
                duration: 1.0,
            })
            .collect();
        LabeledCorpus::new(pairs, anns).unwrap()
    }

    #[test]
    fn metric_set_parsing() {
        assert_eq!(parse_metric_set("lexical").unwrap().len(), 8);
        assert_eq!(parse_metric_set("all").unwrap().len(), 13);
        assert_eq!(
            parse_metric_set("ROUGE-1, bleu,rouge_1").unwrap(),
            vec![MetricKind::Rouge1, MetricKind::Bleu]
        );
        assert_eq!("wmd".parse::<MetricKind>().unwrap(), MetricKind::Wmd);
        assert!(parse_metric_set("nonsense").is_err());
        assert!(parse_metric_set("").is_err());
    }

    #[test]
    fn embedding_metrics_skipped_without_vectors() {
        let c = corpus(&[("a cat", "a dog")]);
        let (m, warnings) = score_corpus(
            &c,
            &parse_metric_set("all").unwrap(),
            &EmbeddingResources::default(),
            &MetricOptions::default(),
            Some(1),
        )
        .unwrap();
        assert_eq!(m.columns.len(), 8);
        assert_eq!(warnings.len(), 5);
    }

    #[test]
    fn scores_match_direct_calls_and_jobs_do_not_matter() {
        let c = corpus(&[("the cat sat", "the cat sat"), ("a b", "c d"), ("one two three", "two three four")]);
        let lexical = MetricKind::LEXICAL.to_vec();
        let (one, _) =
            score_corpus(&c, &lexical, &EmbeddingResources::default(), &MetricOptions::default(), Some(1)).unwrap();
        let (four, _) =
            score_corpus(&c, &lexical, &EmbeddingResources::default(), &MetricOptions::default(), Some(4)).unwrap();
        assert_eq!(one, four);
        for col in &one.columns {
            assert_eq!(col.values[0], Some(1.0), "{}", col.name);
            assert_eq!(col.values[1], Some(0.0), "{}", col.name);
        }
        let r1 = one.column("ROUGE-1").unwrap().values[2].unwrap();
        let direct = rouge_n(&tokenize("one two three"), &tokenize("two three four"), 1).unwrap().value;
        assert_eq!(r1, direct);
    }

    #[test]
    fn distances_are_negated_when_oriented() {
        let table = EmbeddingTable::from_entries(1, [("cat", vec![0.0]), ("dog", vec![2.0])]).unwrap();
        let c = corpus(&[("cat", "dog"), ("zzz", "dog")]);
        let res = EmbeddingResources {
            glove: Some(table),
            ..EmbeddingResources::default()
        };
        let (m, _) = score_corpus(&c, &[MetricKind::Wmd], &res, &MetricOptions::default(), None).unwrap();
        let col = m.column("WMD").unwrap();
        assert_eq!(col.values, vec![Some(2.0), None]);
        assert_eq!(col.oriented(0), Some(-2.0));
        assert_eq!(col.undefined(), 1);
    }
}
