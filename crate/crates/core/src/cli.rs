//! Command-line entry point.

use std::collections::{BTreeSet, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::corpus::{load_corpus, read_score_file, write_corpus, CorpusError, Format, LabeledCorpus};
use crate::correlate::{
    correlation_report_with_flags, render, style_split_report, CorrelationReport, GoldMode, ReportError,
    ReportFormat, ReportOptions,
};
use crate::embmetrics::{
    load_embeddings, load_sentence_embeddings, EmbeddingError, GoldNounTags, LexiconNounTagger, NounTagger,
    PosAggregation, TransportMethod,
};
use crate::heuristics::{
    filter_with_flags, flag_all, heuristic_subsets, FlagReport, HeuristicConfig, HeuristicError, HeuristicId,
    HeuristicSet, Scorers, SentenceBleu,
};
use crate::scoring::{parse_metric_set, score_corpus, EmbeddingResources, MetricOptions, ScoreMatrix, ScoringError};
use crate::sentiment::{ingest_sentiment, IngestedSentiment, SentimentError, SentimentLexicon, SentimentScorer};
use crate::simulate::{generate_corpus, heuristic_confusion, write_ground_truth, PopulationSpec, SimulateError};
use crate::stats::{all_profiles, StyleConfig};
use crate::textmetrics::{tokenize, Orientation, OverlapMode, Smoothing};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Sentiment(#[from] SentimentError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Simulate(#[from] SimulateError),
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Annotator-quality analysis for crowd-sourced sentence-similarity labels.
///
/// Any long flag may also be set in a `key = value` file passed with
/// --config; flags on the command line take precedence over the file, and
/// the file over LABELNOISE_* environment variables.
#[derive(Debug, Parser)]
#[command(name = "labelnoise", version, args_override_self = true)]
pub struct Cli {
    /// Text file of `key = value` lines setting long flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for all randomness (overrides the seed of a population spec).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for pair scoring; defaults to all cores.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and check a corpus, then print a summary.
    Validate(CorpusArgs),
    /// Per-annotator statistics and Radical/Centrist classes.
    Stats(StatsArgs),
    /// Run the heuristics and list flagged annotators.
    Flag(FlagArgs),
    /// Score every pair with the selected metrics.
    Metrics(MetricsArgs),
    /// Metric/label correlations before and after filtering.
    Report(ReportArgs),
    /// Correlations over Radical and Centrist annotators separately.
    StyleReport(StyleReportArgs),
    /// Generate a synthetic corpus with planted annotator kinds.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Pairs table: pair_id,source,is_random,text_a,text_b.
    #[arg(long, env = "LABELNOISE_PAIRS", value_name = "FILE")]
    pairs: PathBuf,
    /// Annotations table: pair_id,annotator_id,label,duration_seconds.
    #[arg(long, env = "LABELNOISE_ANNOTATIONS", value_name = "FILE")]
    annotations: PathBuf,
    /// Input encoding; guessed from the pairs file extension by default.
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

impl CorpusArgs {
    fn load(&self) -> Result<LabeledCorpus, CliError> {
        let format = match self.input_format {
            Some(InputFormat::Csv) => Format::Csv,
            Some(InputFormat::Jsonl) => Format::Jsonl,
            None => Format::from_path(&self.pairs),
        };
        Ok(load_corpus(&self.pairs, &self.annotations, format)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SmoothingArg {
    None,
    AddOne,
}

#[derive(Debug, Args)]
struct HeuristicArgs {
    /// Slow: mean duration strictly above this many seconds [default: 300].
    #[arg(long)]
    slow_threshold: Option<f64>,
    /// LowVariance: label variance strictly below this [default: 1].
    #[arg(long)]
    low_variance_threshold: Option<f64>,
    /// Disagreeable: dissent fraction strictly above this [default: 0.5].
    #[arg(long)]
    disagreement_threshold: Option<f64>,
    /// SentimentDisaligned: pairs count when sentence BLEU is strictly above this [default: 0.8].
    #[arg(long)]
    overlap_threshold: Option<f64>,
    /// SentimentDisaligned: minimum sentiment gap between the texts [default: 1.9].
    #[arg(long)]
    sentiment_gap_threshold: Option<f64>,
    /// SentimentDisaligned: label variance strictly above this [default: 1].
    #[arg(long)]
    sentiment_variance_threshold: Option<f64>,
    /// N-gram order of the overlap BLEU [default: 1].
    #[arg(long)]
    overlap_bleu_order: Option<usize>,
    /// Smoothing of the overlap BLEU [default: none].
    #[arg(long, value_enum)]
    overlap_bleu_smoothing: Option<SmoothingArg>,
    /// Precomputed sentiment: pair_id,score_a,score_b with scores in [-1, 1].
    #[arg(long, env = "LABELNOISE_SENTIMENT_FILE", value_name = "FILE")]
    sentiment_file: Option<PathBuf>,
    /// Replacement sentiment lexicon: word,valence.
    #[arg(long, value_name = "FILE")]
    sentiment_lexicon: Option<PathBuf>,
}

impl HeuristicArgs {
    fn config(&self) -> Result<HeuristicConfig, CliError> {
        let mut cfg = HeuristicConfig::default();
        let floats = [
            (&mut cfg.slow_threshold, self.slow_threshold),
            (&mut cfg.low_variance_threshold, self.low_variance_threshold),
            (&mut cfg.disagreement_threshold, self.disagreement_threshold),
            (&mut cfg.overlap_threshold, self.overlap_threshold),
            (&mut cfg.sentiment_gap_threshold, self.sentiment_gap_threshold),
            (&mut cfg.sentiment_variance_threshold, self.sentiment_variance_threshold),
        ];
        for (slot, value) in floats {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(order) = self.overlap_bleu_order {
            cfg.overlap_bleu_order = order;
        }
        if let Some(s) = self.overlap_bleu_smoothing {
            cfg.overlap_bleu_smoothing = match s {
                SmoothingArg::None => Smoothing::None,
                SmoothingArg::AddOne => Smoothing::AddOne,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn sentiment(&self, corpus: &LabeledCorpus) -> Result<Box<dyn SentimentScorer>, CliError> {
        let lexicon = match &self.sentiment_lexicon {
            Some(path) => SentimentLexicon::from_file(path)?,
            None => SentimentLexicon::bundled(),
        };
        Ok(match &self.sentiment_file {
            Some(path) => Box::new(IngestedSentiment {
                scores: ingest_sentiment(path, corpus)?,
                fallback: lexicon,
            }),
            None => Box::new(lexicon),
        })
    }

    fn flags(&self, corpus: &LabeledCorpus) -> Result<(HeuristicConfig, Vec<FlagReport>), CliError> {
        let cfg = self.config()?;
        let sentiment = self.sentiment(corpus)?;
        let overlap = SentenceBleu::from_config(&cfg);
        let flags = flag_all(
            corpus,
            &cfg,
            Scorers {
                overlap: &overlap,
                sentiment: sentiment.as_ref(),
            },
        );
        Ok((cfg, flags))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct TableOutput {
    /// Write here instead of standard output.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Args)]
struct ReportOutput {
    /// Write here instead of standard output.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormatArg,
}

#[derive(Debug, Args)]
struct StyleArgs {
    /// Annotators need label variance strictly above this to get a style.
    #[arg(long, default_value_t = 1.0)]
    style_min_variance: f64,
    /// A {1,5} or {2,4} share strictly above this decides the style.
    #[arg(long, default_value_t = 0.5)]
    style_share_threshold: f64,
    /// Compute the inclusion variance over labels other than 3.
    #[arg(long)]
    style_exclude_neutral: bool,
}

impl StyleArgs {
    fn config(&self) -> StyleConfig {
        StyleConfig {
            min_variance: self.style_min_variance,
            share_threshold: self.style_share_threshold,
            exclude_neutral_from_variance: self.style_exclude_neutral,
        }
    }
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    style: StyleArgs,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Debug, Args)]
struct FlagArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    heuristics: HeuristicArgs,
    /// Heuristics whose flags remove an annotator, e.g. `2,3`, or `all`.
    #[arg(long = "heuristics", default_value = "all")]
    subset: HeuristicSet,
    /// Summarize all 31 subsets instead of listing annotators.
    #[arg(long)]
    all_subsets: bool,
    #[command(flatten)]
    out: TableOutput,
}

/// `NAME=FILE` pair for score ingestion.
#[derive(Debug, Clone)]
struct NamedPath {
    name: String,
    path: PathBuf,
}

impl FromStr for NamedPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('=') {
            Some((name, path)) if !name.trim().is_empty() && !path.trim().is_empty() => Ok(NamedPath {
                name: name.trim().to_string(),
                path: PathBuf::from(path.trim()),
            }),
            _ => Err(format!("expected NAME=FILE, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OverlapArg {
    Jaccard,
    Precision,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransportArg {
    Exact,
    Sinkhorn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PosAggregationArg {
    Matching,
    AllPairs,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// `lexical`, `embedding`, `all` or a comma list of metric names.
    #[arg(long, default_value = "lexical")]
    metrics: String,
    /// GloVe vectors (text format); also used for WMD, POS distance and pooled L2.
    #[arg(long, env = "LABELNOISE_GLOVE", value_name = "FILE")]
    glove: Option<PathBuf>,
    /// fastText vectors (text format, header line allowed).
    #[arg(long, env = "LABELNOISE_FASTTEXT", value_name = "FILE")]
    fasttext: Option<PathBuf>,
    /// Sentence embeddings for L2_score: pair_id,vec_a,vec_b or pair_id,side,vector.
    #[arg(long, env = "LABELNOISE_ELMO_VECTORS", value_name = "FILE")]
    elmo_vectors: Option<PathBuf>,
    /// Gold POS tags: pair_id,side,token_index,tag. Defaults to the bundled noun lexicon.
    #[arg(long, env = "LABELNOISE_POS_TAGS", value_name = "FILE")]
    pos_tags: Option<PathBuf>,
    /// Extra similarity score column from pair_id,score (repeatable).
    #[arg(long, value_name = "NAME=FILE")]
    precomputed: Vec<NamedPath>,
    /// Extra distance score column from pair_id,score (repeatable).
    #[arg(long, value_name = "NAME=FILE")]
    precomputed_distance: Vec<NamedPath>,
    /// Normalization of 1-gram_overlap.
    #[arg(long, value_enum, default_value = "jaccard")]
    overlap_mode: OverlapArg,
    /// METEOR precision weight.
    #[arg(long, default_value_t = 0.9)]
    meteor_alpha: f64,
    /// Optimal-transport solver for WMD.
    #[arg(long, value_enum, default_value = "exact")]
    transport: TransportArg,
    #[arg(long, default_value_t = 0.01)]
    sinkhorn_epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    sinkhorn_max_iter: usize,
    /// How noun distances are combined in POS_dist_score.
    #[arg(long, value_enum, default_value = "matching")]
    pos_aggregation: PosAggregationArg,
}

impl MetricArgs {
    fn options(&self) -> MetricOptions {
        MetricOptions {
            overlap_mode: match self.overlap_mode {
                OverlapArg::Jaccard => OverlapMode::Jaccard,
                OverlapArg::Precision => OverlapMode::Precision,
            },
            meteor_alpha: self.meteor_alpha,
            transport: match self.transport {
                TransportArg::Exact => TransportMethod::Exact,
                TransportArg::Sinkhorn => TransportMethod::Sinkhorn {
                    epsilon: self.sinkhorn_epsilon,
                    max_iter: self.sinkhorn_max_iter,
                },
            },
            pos_aggregation: match self.pos_aggregation {
                PosAggregationArg::Matching => PosAggregation::Matching,
                PosAggregationArg::AllPairs => PosAggregation::AllPairs,
            },
            ..MetricOptions::default()
        }
    }

    /// Attaches precomputed similarity channels and scores the corpus.
    fn score(
        &self,
        corpus: LabeledCorpus,
        jobs: Option<usize>,
        err: &mut dyn Write,
    ) -> Result<(LabeledCorpus, ScoreMatrix), CliError> {
        let kinds = parse_metric_set(&self.metrics).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut corpus = corpus;
        for np in &self.precomputed {
            corpus = corpus.attach_precomputed(&np.name, read_score_file(&np.path)?)?;
        }
        let needs_vectors = kinds.iter().any(|k| !k.is_lexical());
        let vocab: HashSet<String> = if needs_vectors {
            corpus
                .pairs()
                .iter()
                .flat_map(|p| {
                    let mut t = tokenize(&p.text_a).tokens().to_vec();
                    t.extend_from_slice(tokenize(&p.text_b).tokens());
                    t
                })
                .collect()
        } else {
            HashSet::new()
        };
        let load = |path: &Option<PathBuf>| -> Result<_, CliError> {
            match path {
                Some(p) if needs_vectors => Ok(Some(load_embeddings(p, Some(&vocab))?)),
                _ => Ok(None),
            }
        };
        let tagger: Box<dyn NounTagger> = match &self.pos_tags {
            Some(p) => Box::new(GoldNounTags::from_file(p)?),
            None => Box::new(LexiconNounTagger::bundled()),
        };
        let resources = EmbeddingResources {
            glove: load(&self.glove)?,
            fasttext: load(&self.fasttext)?,
            sentence_embeddings: match &self.elmo_vectors {
                Some(p) => Some(load_sentence_embeddings(p, &corpus)?),
                None => None,
            },
            tagger,
        };
        let (mut matrix, warnings) = score_corpus(&corpus, &kinds, &resources, &self.options(), jobs)?;
        for np in &self.precomputed_distance {
            let scores = read_score_file(&np.path)?;
            if let Some(unknown) = scores.keys().find(|id| corpus.pair(id).is_none()) {
                return Err(CorpusError::UnknownPair(unknown.clone()).into());
            }
            if matrix.column(&np.name).is_some() {
                return Err(CorpusError::ChannelCollision(np.name.clone()).into());
            }
            matrix.push_channel(&np.name, Orientation::Distance, &scores);
        }
        for w in warnings {
            let _ = writeln!(err, "warning: {w}");
        }
        for col in &matrix.columns {
            let undefined = col.undefined();
            if undefined > 0 {
                let _ = writeln!(err, "note: {} undefined for {undefined} pairs", col.name);
            }
        }
        Ok((corpus, matrix))
    }
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    #[command(flatten)]
    out: TableOutput,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GoldArg {
    PairMean,
    PerAnnotation,
}

/// Subsets to evaluate: `all` for all 31, or `;`-separated subsets like `2,3;1`.
#[derive(Debug, Clone)]
struct SubsetList(Vec<HeuristicSet>);

impl FromStr for SubsetList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(SubsetList(heuristic_subsets()));
        }
        s.split(';')
            .map(|part| part.parse::<HeuristicSet>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()
            .map(SubsetList)
    }
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    /// `all` for the 31 subsets, or `;`-separated subsets such as `2,3;1`.
    #[arg(long = "heuristics", default_value = "all")]
    subsets: SubsetList,
    /// Human-side value: mean label per pair, or one point per annotation.
    #[arg(long, value_enum, default_value = "pair-mean")]
    gold: GoldArg,
    /// Restrict to pairs of one source dataset.
    #[arg(long, value_name = "NAME")]
    source: Option<String>,
    /// Add one report per source dataset after the overall one.
    #[arg(long)]
    by_source: bool,
}

impl CorrelationArgs {
    fn options(&self) -> ReportOptions {
        ReportOptions {
            gold: match self.gold {
                GoldArg::PairMean => GoldMode::PairMean,
                GoldArg::PerAnnotation => GoldMode::PerAnnotation,
            },
            source: self.source.clone(),
        }
    }

    /// The base options plus one per source when `--by-source` is set.
    fn all_options(&self, corpus: &LabeledCorpus) -> Vec<(String, ReportOptions)> {
        let base = self.options();
        let mut out = vec![(
            base.source.as_ref().map_or("all annotators".to_string(), |s| format!("source {s}")),
            base.clone(),
        )];
        if self.by_source {
            let sources: BTreeSet<&str> = corpus.pairs().iter().map(|p| p.source.as_str()).collect();
            for s in sources {
                out.push((
                    format!("source {s}"),
                    ReportOptions {
                        source: Some(s.to_string()),
                        ..base.clone()
                    },
                ));
            }
        }
        out
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    heuristics: HeuristicArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    #[command(flatten)]
    correlation: CorrelationArgs,
    #[command(flatten)]
    out: ReportOutput,
}

#[derive(Debug, Args)]
struct StyleReportArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    heuristics: HeuristicArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    #[command(flatten)]
    correlation: CorrelationArgs,
    #[command(flatten)]
    style: StyleArgs,
    #[command(flatten)]
    out: ReportOutput,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Population spec (JSON); defaults to 500 pairs, 60 annotators with
    /// 20% constant, 20% uniform-random and 60% reliable.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Directory for pairs.csv, annotations.csv, truth_annotators.csv and truth_pairs.csv.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Also run the heuristics and write confusion.csv against the planted kinds.
    #[arg(long)]
    confusion: bool,
    #[command(flatten)]
    heuristics: HeuristicArgs,
}

fn emit(output: &Option<PathBuf>, content: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        }),
        None => out.write_all(content.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_validate(args: &CorpusArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = args.load()?;
    let random = corpus.pairs().iter().filter(|p| p.is_random).count();
    let mut sources: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for p in corpus.pairs() {
        *sources.entry(p.source.as_str()).or_default() += 1;
    }
    let sources: Vec<String> = sources.iter().map(|(s, n)| format!("{s} ({n})")).collect();
    let text = format!(
        "pairs: {} (random: {random})\nannotations: {}\nannotators: {}\nsources: {}\n",
        corpus.pairs().len(),
        corpus.annotations().len(),
        corpus.annotators().count(),
        sources.join(", ")
    );
    emit(&None, &text, out)
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = args.corpus.load()?;
    let profiles = all_profiles(&corpus, &args.style.config());
    let content = match args.out.format {
        TableFormat::Json => json_string(&profiles),
        TableFormat::Csv => csv_string(
            &[
                "annotator_id",
                "n_labels",
                "mean_duration",
                "label_variance",
                "nonneutral_variance",
                "mean_random",
                "mean_nonrandom",
                "extreme_share",
                "central_share",
                "disagreement_rate",
                "style",
            ],
            profiles.iter().map(|p| {
                vec![
                    p.annotator_id.to_string(),
                    p.n_labels.to_string(),
                    p.mean_duration.to_string(),
                    p.label_variance.to_string(),
                    opt(p.nonneutral_variance),
                    opt(p.mean_random),
                    opt(p.mean_nonrandom),
                    opt(p.extreme_share),
                    opt(p.central_share),
                    opt(p.disagreement_rate),
                    p.style.as_str().to_string(),
                ]
            }),
        ),
    };
    emit(&args.out.output, &content, out)
}

fn cmd_flag(args: &FlagArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = args.corpus.load()?;
    let (_, flags) = args.heuristics.flags(&corpus)?;
    if args.all_subsets {
        let rows: Vec<(HeuristicSet, crate::heuristics::FilteredCorpus)> = heuristic_subsets()
            .into_iter()
            .map(|s| (s, filter_with_flags(&corpus, &flags, s)))
            .collect();
        let content = match args.out.format {
            TableFormat::Json => json_string(
                &rows
                    .iter()
                    .map(|(s, f)| {
                        serde_json::json!({
                            "subset": s,
                            "annotators_removed": f.removed,
                            "annotations_removed": corpus.annotations().len() - f.corpus.annotations().len(),
                            "surviving_pairs": f.surviving_pairs(),
                        })
                    })
                    .collect::<Vec<_>>(),
            ),
            TableFormat::Csv => csv_string(
                &[
                    "subset",
                    "annotators_removed",
                    "annotations_removed",
                    "surviving_pairs",
                    "removed_ids",
                ],
                rows.iter().map(|(s, f)| {
                    vec![
                        s.to_list(),
                        f.removed.len().to_string(),
                        (corpus.annotations().len() - f.corpus.annotations().len()).to_string(),
                        f.surviving_pairs().to_string(),
                        f.removed.iter().map(|a| a.0.as_str()).collect::<Vec<_>>().join(";"),
                    ]
                }),
            ),
        };
        return emit(&args.out.output, &content, out);
    }
    let content = match args.out.format {
        TableFormat::Json => json_string(&flags),
        TableFormat::Csv => {
            let mut header = vec!["annotator_id", "flags", "removed"];
            header.extend(HeuristicId::ALL.iter().map(|h| h.name()));
            csv_string(
                &header,
                flags.iter().map(|f| {
                    let mut row = vec![
                        f.annotator_id.to_string(),
                        f.flags.to_list(),
                        f.flags.intersects(args.subset).to_string(),
                    ];
                    row.extend(
                        HeuristicId::ALL
                            .iter()
                            .map(|h| f.evidence.get(h).map(|e| e.describe()).unwrap_or_default()),
                    );
                    row
                }),
            )
        }
    };
    emit(&args.out.output, &content, out)
}

fn cmd_metrics(args: &MetricsArgs, jobs: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let corpus = args.corpus.load()?;
    let (_, matrix) = args.metrics.score(corpus, jobs, err)?;
    let content = match args.out.format {
        TableFormat::Json => json_string(&matrix),
        TableFormat::Csv => {
            let mut header = vec!["pair_id"];
            header.extend(matrix.columns.iter().map(|c| c.name.as_str()));
            csv_string(
                &header,
                matrix.pair_ids.iter().enumerate().map(|(i, id)| {
                    let mut row = vec![id.to_string()];
                    row.extend(matrix.columns.iter().map(|c| opt(c.values[i])));
                    row
                }),
            )
        }
    };
    emit(&args.out.output, &content, out)
}

fn report_format(f: ReportFormatArg) -> ReportFormat {
    match f {
        ReportFormatArg::Csv => ReportFormat::Csv,
        ReportFormatArg::Json => ReportFormat::Json,
        ReportFormatArg::Text => ReportFormat::Text,
    }
}

fn cmd_report(args: &ReportArgs, jobs: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let corpus = args.corpus.load()?;
    let (cfg, flags) = args.heuristics.flags(&corpus)?;
    let (corpus, matrix) = args.metrics.score(corpus, jobs, err)?;
    let mut reports: Vec<CorrelationReport> = Vec::new();
    for (label, opts) in args.correlation.all_options(&corpus) {
        reports.push(correlation_report_with_flags(
            &corpus,
            &matrix,
            &flags,
            &args.correlation.subsets.0,
            &cfg,
            &opts,
            &label,
        )?);
    }
    let refs: Vec<&CorrelationReport> = reports.iter().collect();
    emit(&args.out.output, &render(&refs, report_format(args.out.format)), out)
}

fn cmd_style_report(
    args: &StyleReportArgs,
    jobs: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let corpus = args.corpus.load()?;
    let (cfg, flags) = args.heuristics.flags(&corpus)?;
    let (corpus, matrix) = args.metrics.score(corpus, jobs, err)?;
    let mut reports = Vec::new();
    for (label, opts) in args.correlation.all_options(&corpus) {
        let (mut radical, mut centrist) = style_split_report(
            &corpus,
            &matrix,
            &flags,
            &args.correlation.subsets.0,
            &cfg,
            &args.style.config(),
            &opts,
        )?;
        if label != "all annotators" {
            radical.label = format!("{} ({label})", radical.label);
            centrist.label = format!("{} ({label})", centrist.label);
        }
        reports.push(radical);
        reports.push(centrist);
    }
    let refs: Vec<&CorrelationReport> = reports.iter().collect();
    emit(&args.out.output, &render(&refs, report_format(args.out.format)), out)
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(path) => PopulationSpec::from_json_file(path)?,
        None => PopulationSpec::contaminated(0),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (corpus, truth) = generate_corpus(&spec)?;
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    write_corpus(&corpus, &dir.join("pairs.csv"), &dir.join("annotations.csv"), Format::Csv)?;
    write_ground_truth(&truth, &dir.join("truth_annotators.csv"), &dir.join("truth_pairs.csv"))?;
    if args.confusion {
        let (_, flags) = args.heuristics.flags(&corpus)?;
        let table = heuristic_confusion(&truth, &flags);
        emit(&Some(dir.join("confusion.csv")), &table.to_csv(), out)?;
    }
    let text = format!(
        "wrote {} pairs, {} annotations by {} annotators to {} (seed {})\n",
        corpus.pairs().len(),
        corpus.annotations().len(),
        truth.annotator_kinds.len(),
        dir.display(),
        spec.seed
    );
    emit(&None, &text, out)
}

/// Long flags accepted after `subcommand`, including global ones, mapped to
/// whether they take a value.
fn known_flags(subcommand: &str) -> Option<Vec<(String, bool)>> {
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(subcommand)?;
    Some(
        cmd.get_arguments()
            .chain(sub.get_arguments())
            .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
            .collect(),
    )
}

/// Turns `key = value` lines into flags for `subcommand`. Keys may use `_`
/// or `-`; boolean flags take `true` or `false`.
fn config_args(path: &Path, subcommand: &str) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let flags = known_flags(subcommand).unwrap_or_default();
    let every_flag: HashSet<String> = Cli::command()
        .get_subcommands()
        .flat_map(|s| s.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect::<Vec<_>>())
        .collect();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("{}, line {}: expected key = value", path.display(), n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key == "config" {
            return Err(CliError::Usage(format!("{}, line {}: config files cannot nest", path.display(), n + 1)));
        }
        match flags.iter().find(|(name, _)| *name == key) {
            Some((_, true)) => {
                out.push(OsString::from(format!("--{key}")));
                out.push(OsString::from(value));
            }
            Some((_, false)) => match value {
                "true" => out.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "{}, line {}: {key} expects true or false, got {other:?}",
                        path.display(),
                        n + 1
                    )))
                }
            },
            // valid for another subcommand: not applicable here
            None if every_flag.contains(&key) => {}
            None => {
                return Err(CliError::Usage(format!(
                    "{}, line {}: unknown setting {key:?}",
                    path.display(),
                    n + 1
                )))
            }
        }
    }
    Ok(out)
}

/// Splices config-file flags in right after the subcommand name, so that
/// flags given on the command line win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config: Option<PathBuf> = None;
    let mut sub_pos: Option<usize> = None;
    let mut i = 1;
    while i < argv.len() {
        let tok = argv[i].to_string_lossy();
        if tok == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = tok.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if sub_pos.is_none() && (tok == "--seed" || tok == "--jobs") {
            i += 2;
            continue;
        } else if sub_pos.is_none() && !tok.starts_with('-') {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub_pos) else {
        return Ok(argv);
    };
    let extra = config_args(&path, &argv[pos].to_string_lossy())?;
    let mut out = argv;
    out.splice(pos + 1..pos + 1, extra);
    Ok(out)
}

/// Runs the command line in `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Flag(a) => cmd_flag(a, out),
        Command::Metrics(a) => cmd_metrics(a, cli.jobs, out, err),
        Command::Report(a) => cmd_report(a, cli.jobs, out, err),
        Command::StyleReport(a) => cmd_style_report(a, cli.jobs, out, err),
        Command::Simulate(a) => cmd_simulate(a, cli.seed, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
