//! Unreliable-annotator flags and the subset-combination engine.
//!
//! Five flags are defined:
//!
//! 1. `Slow`: mean labeling time above a threshold.
//! 2. `LowVariance`: label variance below a threshold.
//! 3. `HighRandom`: random pairs rated higher on average than non-random ones.
//! 4. `Disagreeable`: frequent dissent from a unanimous (reduced) decision of
//!    the two co-annotators.
//! 5. `SentimentDisaligned`: inconsistent labels on near-identical pairs whose
//!    sentiment differs sharply.
//!
//! An annotator flagged by any heuristic of the selected subset loses all of
//! their annotations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatorId, LabeledCorpus, SentencePair};
use crate::sentiment::SentimentScorer;
use crate::stats::{self, reduce, AnnotatorProfile};
use crate::textmetrics::{self, Smoothing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum HeuristicId {
    Slow = 1,
    LowVariance = 2,
    HighRandom = 3,
    Disagreeable = 4,
    SentimentDisaligned = 5,
}

impl HeuristicId {
    pub const ALL: [HeuristicId; 5] = [
        HeuristicId::Slow,
        HeuristicId::LowVariance,
        HeuristicId::HighRandom,
        HeuristicId::Disagreeable,
        HeuristicId::SentimentDisaligned,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<HeuristicId> {
        HeuristicId::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            HeuristicId::Slow => "slow",
            HeuristicId::LowVariance => "low_variance",
            HeuristicId::HighRandom => "high_random",
            HeuristicId::Disagreeable => "disagreeable",
            HeuristicId::SentimentDisaligned => "sentiment_disaligned",
        }
    }
}

/// A set of heuristics, stored as a bitmask over ids 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HeuristicSet(u8);

/// Serialized as the list of heuristic numbers, e.g. `[2, 3]`.
impl Serialize for HeuristicSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.ids().map(HeuristicId::number))
    }
}

impl<'de> Deserialize<'de> for HeuristicSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let nums = Vec::<u8>::deserialize(deserializer)?;
        let mut set = HeuristicSet::EMPTY;
        for n in nums {
            let id = HeuristicId::from_number(n)
                .ok_or_else(|| serde::de::Error::custom(format!("heuristic number out of range: {n}")))?;
            set.insert(id);
        }
        Ok(set)
    }
}

impl HeuristicSet {
    pub const EMPTY: HeuristicSet = HeuristicSet(0);
    pub const FULL: HeuristicSet = HeuristicSet(0b1_1111);

    pub fn of(ids: &[HeuristicId]) -> HeuristicSet {
        let mut s = HeuristicSet::EMPTY;
        for &id in ids {
            s.insert(id);
        }
        s
    }

    pub fn insert(&mut self, id: HeuristicId) {
        self.0 |= 1 << (id.number() - 1);
    }

    pub fn contains(self, id: HeuristicId) -> bool {
        self.0 & (1 << (id.number() - 1)) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: HeuristicSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: HeuristicSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn ids(self) -> impl Iterator<Item = HeuristicId> {
        HeuristicId::ALL.into_iter().filter(move |&h| self.contains(h))
    }

    /// Compact form, e.g. `2,3`.
    pub fn to_list(self) -> String {
        self.ids()
            .map(|h| h.number().to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for HeuristicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nums: Vec<String> = self.ids().map(|h| h.number().to_string()).collect();
        write!(f, "[{}]", nums.join(", "))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HeuristicError {
    #[error("invalid heuristic list {0:?}: expected numbers 1-5 separated by commas, or \"all\"")]
    Parse(String),
    #[error("invalid threshold {name}: {value}")]
    Threshold { name: &'static str, value: f64 },
}

impl FromStr for HeuristicSet {
    type Err = HeuristicError;

    /// Parses `2,3`, `[2, 3]` or `all`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        if trimmed.eq_ignore_ascii_case("all") {
            return Ok(HeuristicSet::FULL);
        }
        let mut set = HeuristicSet::EMPTY;
        for part in trimmed.split(',') {
            let id = part
                .trim()
                .parse::<u8>()
                .ok()
                .and_then(HeuristicId::from_number)
                .ok_or_else(|| HeuristicError::Parse(s.to_string()))?;
            set.insert(id);
        }
        Ok(set)
    }
}

/// All 31 non-empty subsets of the five heuristics, by cardinality and then
/// lexicographically: `[1]`, `[2]`, …, `[5]`, `[1, 2]`, …, `[1, 2, 3, 4, 5]`.
pub fn heuristic_subsets() -> Vec<HeuristicSet> {
    let mut subsets: Vec<HeuristicSet> = (1u8..32).map(HeuristicSet).collect();
    subsets.sort_by_key(|s| {
        let ids: Vec<u8> = s.ids().map(HeuristicId::number).collect();
        (ids.len(), ids)
    });
    subsets
}

/// Thresholds for all five heuristics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Seconds; `Slow` fires when the mean duration is strictly greater.
    pub slow_threshold: f64,
    /// `LowVariance` fires when the label variance is strictly lower.
    pub low_variance_threshold: f64,
    /// `Disagreeable` fires when the dissent fraction is strictly greater.
    pub disagreement_threshold: f64,
    /// Pairs count as near-identical when sentence BLEU is strictly greater.
    pub overlap_threshold: f64,
    /// Minimum absolute sentiment difference (inclusive).
    pub sentiment_gap_threshold: f64,
    /// `SentimentDisaligned` fires when label variance on probe pairs is strictly greater.
    pub sentiment_variance_threshold: f64,
    /// N-gram order of the overlap BLEU.
    pub overlap_bleu_order: usize,
    pub overlap_bleu_smoothing: Smoothing,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            slow_threshold: 300.0,
            low_variance_threshold: 1.0,
            disagreement_threshold: 0.5,
            overlap_threshold: 0.8,
            sentiment_gap_threshold: 1.9,
            sentiment_variance_threshold: 1.0,
            overlap_bleu_order: 1,
            overlap_bleu_smoothing: Smoothing::None,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> Result<(), HeuristicError> {
        let checks: [(&'static str, f64, f64); 6] = [
            ("slow_threshold", self.slow_threshold, f64::INFINITY),
            ("low_variance_threshold", self.low_variance_threshold, f64::INFINITY),
            ("disagreement_threshold", self.disagreement_threshold, 1.0),
            ("overlap_threshold", self.overlap_threshold, 1.0),
            ("sentiment_gap_threshold", self.sentiment_gap_threshold, 2.0),
            ("sentiment_variance_threshold", self.sentiment_variance_threshold, f64::INFINITY),
        ];
        for (name, value, max) in checks {
            if !(value >= 0.0 && value <= max) || value.is_nan() {
                return Err(HeuristicError::Threshold { name, value });
            }
        }
        if self.overlap_bleu_order == 0 {
            return Err(HeuristicError::Threshold {
                name: "overlap_bleu_order",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Scores how much two texts of a pair overlap lexically.
pub trait OverlapScorer: Sync {
    fn overlap(&self, pair: &SentencePair) -> f64;
}

/// Sentence-level BLEU of `text_a` against `text_b`.
#[derive(Debug, Clone, Copy)]
pub struct SentenceBleu {
    pub max_n: usize,
    pub smoothing: Smoothing,
}

impl SentenceBleu {
    pub fn from_config(cfg: &HeuristicConfig) -> Self {
        SentenceBleu {
            max_n: cfg.overlap_bleu_order,
            smoothing: cfg.overlap_bleu_smoothing,
        }
    }
}

impl OverlapScorer for SentenceBleu {
    fn overlap(&self, pair: &SentencePair) -> f64 {
        let a = textmetrics::tokenize(&pair.text_a);
        let b = textmetrics::tokenize(&pair.text_b);
        textmetrics::bleu(&a, &b, self.max_n, self.smoothing)
            .map(|s| s.value)
            .unwrap_or(0.0)
    }
}

/// The text scorers heuristic 5 depends on.
#[derive(Clone, Copy)]
pub struct Scorers<'a> {
    pub overlap: &'a dyn OverlapScorer,
    pub sentiment: &'a dyn SentimentScorer,
}

/// Statistic and threshold behind a raised flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "heuristic", rename_all = "snake_case")]
pub enum Evidence {
    Slow { mean_duration: f64, threshold: f64 },
    LowVariance { variance: f64, threshold: f64 },
    HighRandom { mean_random: f64, mean_nonrandom: f64 },
    Disagreeable { disagreed: usize, eligible: usize, threshold: f64 },
    SentimentDisaligned { probe_pairs: usize, variance: f64, threshold: f64 },
}

impl Evidence {
    /// One-line human readable form.
    pub fn describe(&self) -> String {
        match self {
            Evidence::Slow { mean_duration, threshold } => {
                format!("mean_duration={mean_duration:.3}>{threshold}")
            }
            Evidence::LowVariance { variance, threshold } => {
                format!("variance={variance:.4}<{threshold}")
            }
            Evidence::HighRandom {
                mean_random,
                mean_nonrandom,
            } => format!("mean_random={mean_random:.4}>mean_nonrandom={mean_nonrandom:.4}"),
            Evidence::Disagreeable {
                disagreed,
                eligible,
                threshold,
            } => format!("disagreed={disagreed}/{eligible}>{threshold}"),
            Evidence::SentimentDisaligned {
                probe_pairs,
                variance,
                threshold,
            } => format!("probe_variance={variance:.4}>{threshold} over {probe_pairs} pairs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagReport {
    pub annotator_id: AnnotatorId,
    pub flags: HeuristicSet,
    pub evidence: BTreeMap<HeuristicId, Evidence>,
}

pub fn flag_slow(profile: &AnnotatorProfile, cfg: &HeuristicConfig) -> bool {
    slow_evidence(profile, cfg).is_some()
}

fn slow_evidence(profile: &AnnotatorProfile, cfg: &HeuristicConfig) -> Option<Evidence> {
    (profile.mean_duration > cfg.slow_threshold).then_some(Evidence::Slow {
        mean_duration: profile.mean_duration,
        threshold: cfg.slow_threshold,
    })
}

pub fn flag_low_variance(profile: &AnnotatorProfile, cfg: &HeuristicConfig) -> bool {
    low_variance_evidence(profile, cfg).is_some()
}

fn low_variance_evidence(profile: &AnnotatorProfile, cfg: &HeuristicConfig) -> Option<Evidence> {
    (profile.label_variance < cfg.low_variance_threshold).then_some(Evidence::LowVariance {
        variance: profile.label_variance,
        threshold: cfg.low_variance_threshold,
    })
}

pub fn flag_high_random(profile: &AnnotatorProfile) -> bool {
    high_random_evidence(profile).is_some()
}

fn high_random_evidence(profile: &AnnotatorProfile) -> Option<Evidence> {
    let (r, nr) = (profile.mean_random?, profile.mean_nonrandom?);
    (r > nr).then_some(Evidence::HighRandom {
        mean_random: r,
        mean_nonrandom: nr,
    })
}

/// Counts behind the `Disagreeable` heuristic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DisagreementTally {
    /// Pairs with exactly two co-annotators who agree on the reduced label.
    pub eligible: usize,
    /// Eligible pairs where this annotator's reduced label differs.
    pub disagreed: usize,
}

impl DisagreementTally {
    pub fn rate(&self) -> Option<f64> {
        (self.eligible > 0).then(|| self.disagreed as f64 / self.eligible as f64)
    }
}

pub fn disagreement_tally(corpus: &LabeledCorpus, annotator: &AnnotatorId) -> DisagreementTally {
    let mut tally = DisagreementTally::default();
    for own in corpus.annotations_by(annotator) {
        let Some(pi) = corpus.pair_index(&own.pair_id) else {
            continue;
        };
        let others: Vec<i8> = corpus
            .annotations_for_pair(pi)
            .filter(|a| &a.annotator_id != annotator)
            .map(|a| reduce(a.label))
            .collect();
        if let [x, y] = others[..] {
            if x == y {
                tally.eligible += 1;
                if reduce(own.label) != x {
                    tally.disagreed += 1;
                }
            }
        }
    }
    tally
}

pub fn flag_disagreeable(corpus: &LabeledCorpus, annotator: &AnnotatorId, cfg: &HeuristicConfig) -> bool {
    disagreeable_evidence(corpus, annotator, cfg).is_some()
}

fn disagreeable_evidence(
    corpus: &LabeledCorpus,
    annotator: &AnnotatorId,
    cfg: &HeuristicConfig,
) -> Option<Evidence> {
    let t = disagreement_tally(corpus, annotator);
    (t.rate()? > cfg.disagreement_threshold).then_some(Evidence::Disagreeable {
        disagreed: t.disagreed,
        eligible: t.eligible,
        threshold: cfg.disagreement_threshold,
    })
}

/// Marks pairs that are near-identical lexically yet differ strongly in
/// sentiment. Indexed like `corpus.pairs()`.
pub fn sentiment_probe_pairs(corpus: &LabeledCorpus, scorers: Scorers<'_>, cfg: &HeuristicConfig) -> Vec<bool> {
    corpus
        .pairs()
        .par_iter()
        .map(|p| {
            if scorers.overlap.overlap(p) <= cfg.overlap_threshold {
                return false;
            }
            let (sa, sb) = scorers.sentiment.sentiment(p);
            (sa - sb).abs() >= cfg.sentiment_gap_threshold
        })
        .collect()
}

pub fn flag_sentiment_disaligned(
    corpus: &LabeledCorpus,
    annotator: &AnnotatorId,
    scorers: Scorers<'_>,
    cfg: &HeuristicConfig,
) -> bool {
    let probes = sentiment_probe_pairs(corpus, scorers, cfg);
    sentiment_evidence(corpus, annotator, &probes, cfg).is_some()
}

fn sentiment_evidence(
    corpus: &LabeledCorpus,
    annotator: &AnnotatorId,
    probes: &[bool],
    cfg: &HeuristicConfig,
) -> Option<Evidence> {
    let labels: Vec<f64> = corpus
        .annotations_by(annotator)
        .filter(|a| corpus.pair_index(&a.pair_id).is_some_and(|i| probes[i]))
        .map(|a| a.label.as_f64())
        .collect();
    if labels.len() < 2 {
        return None;
    }
    let variance = stats::population_variance(&labels)?;
    (variance > cfg.sentiment_variance_threshold).then_some(Evidence::SentimentDisaligned {
        probe_pairs: labels.len(),
        variance,
        threshold: cfg.sentiment_variance_threshold,
    })
}

/// Evaluate all five heuristics for every annotator. Sorted by annotator id.
pub fn flag_all(corpus: &LabeledCorpus, cfg: &HeuristicConfig, scorers: Scorers<'_>) -> Vec<FlagReport> {
    let probes = sentiment_probe_pairs(corpus, scorers, cfg);
    let profiles = stats::all_profiles(corpus, &stats::StyleConfig::default());
    profiles
        .par_iter()
        .map(|profile| {
            let id = &profile.annotator_id;
            let candidates = [
                (HeuristicId::Slow, slow_evidence(profile, cfg)),
                (HeuristicId::LowVariance, low_variance_evidence(profile, cfg)),
                (HeuristicId::HighRandom, high_random_evidence(profile)),
                (HeuristicId::Disagreeable, disagreeable_evidence(corpus, id, cfg)),
                (
                    HeuristicId::SentimentDisaligned,
                    sentiment_evidence(corpus, id, &probes, cfg),
                ),
            ];
            let mut report = FlagReport {
                annotator_id: id.clone(),
                flags: HeuristicSet::EMPTY,
                evidence: BTreeMap::new(),
            };
            for (h, ev) in candidates {
                if let Some(ev) = ev {
                    report.flags.insert(h);
                    report.evidence.insert(h, ev);
                }
            }
            report
        })
        .collect()
}

/// Annotators flagged by any heuristic in `subset`.
pub fn removed_by(flags: &[FlagReport], subset: HeuristicSet) -> BTreeSet<AnnotatorId> {
    flags
        .iter()
        .filter(|r| r.flags.intersects(subset))
        .map(|r| r.annotator_id.clone())
        .collect()
}

/// A corpus with the annotations of unreliable annotators removed.
#[derive(Debug, Clone)]
pub struct FilteredCorpus {
    pub subset: HeuristicSet,
    pub corpus: LabeledCorpus,
    pub removed: BTreeSet<AnnotatorId>,
}

impl FilteredCorpus {
    /// Pairs left with at least one annotation.
    pub fn surviving_pairs(&self) -> usize {
        (0..self.corpus.pairs().len())
            .filter(|&i| self.corpus.annotations_for_pair(i).next().is_some())
            .count()
    }
}

pub fn apply_filters(
    corpus: &LabeledCorpus,
    subset: HeuristicSet,
    cfg: &HeuristicConfig,
    scorers: Scorers<'_>,
) -> FilteredCorpus {
    let flags = flag_all(corpus, cfg, scorers);
    filter_with_flags(corpus, &flags, subset)
}

/// Like [`apply_filters`] with flags computed beforehand.
pub fn filter_with_flags(corpus: &LabeledCorpus, flags: &[FlagReport], subset: HeuristicSet) -> FilteredCorpus {
    let removed = removed_by(flags, subset);
    let filtered = corpus.retain_annotations(|a| !removed.contains(&a.annotator_id));
    FilteredCorpus {
        subset,
        corpus: filtered,
        removed,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::{Annotation, Label, PairId};
    use crate::sentiment::FixedSentiment;

    #[test]
    fn subsets_follow_appendix_order() {
        let s = heuristic_subsets();
        assert_eq!(s.len(), 31);
        assert_eq!(s[0].to_string(), "[1]");
        assert_eq!(s[4].to_string(), "[5]");
        assert_eq!(s[5].to_string(), "[1, 2]");
        assert_eq!(s[14].to_string(), "[4, 5]");
        assert_eq!(s[15].to_string(), "[1, 2, 3]");
        assert_eq!(s[30].to_string(), "[1, 2, 3, 4, 5]");
    }

    #[test]
    fn parse_sets() {
        assert_eq!("2,3".parse::<HeuristicSet>().unwrap(), HeuristicSet::of(&[HeuristicId::LowVariance, HeuristicId::HighRandom]));
        assert_eq!("all".parse::<HeuristicSet>().unwrap(), HeuristicSet::FULL);
        assert_eq!("[1, 5]".parse::<HeuristicSet>().unwrap().to_list(), "1,5");
        assert!("6".parse::<HeuristicSet>().is_err());
        assert!("".parse::<HeuristicSet>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(HeuristicConfig::default().validate().is_ok());
        let bad = HeuristicConfig {
            disagreement_threshold: 1.5,
            ..HeuristicConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = HeuristicConfig {
            slow_threshold: -1.0,
            ..HeuristicConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn profile(mean_duration: f64, variance: f64, r: Option<f64>, nr: Option<f64>) -> AnnotatorProfile {
        AnnotatorProfile {
            annotator_id: "a".into(),
            n_labels: 4,
            mean_duration,
            label_variance: variance,
            nonneutral_variance: None,
            mean_random: r,
            mean_nonrandom: nr,
            extreme_share: None,
            central_share: None,
            disagreement_rate: None,
            style: stats::Style::Excluded,
        }
    }

    #[test]
    fn slow_boundary() {
        let cfg = HeuristicConfig::default();
        assert!(flag_slow(&profile(350.0, 2.0, None, None), &cfg));
        assert!(!flag_slow(&profile(300.0, 2.0, None, None), &cfg));
        assert!(!flag_slow(&profile(10.0, 2.0, None, None), &cfg));
    }

    #[test]
    fn high_random_cases() {
        assert!(flag_high_random(&profile(1.0, 1.0, Some(4.2), Some(3.1))));
        assert!(!flag_high_random(&profile(1.0, 1.0, Some(1.0), Some(4.0))));
        assert!(!flag_high_random(&profile(1.0, 1.0, None, Some(4.0))));
    }

    /// Pairs are `(pair_id, is_random, text_a, text_b)`; annotations `(pair, annotator, label)`.
    pub(crate) fn build(pairs: &[(&str, bool, &str, &str)], anns: &[(&str, &str, i64)]) -> LabeledCorpus {
        let pairs = pairs
            .iter()
            .map(|&(id, r, a, b)| SentencePair {
                pair_id: id.into(),
                source: "t".into(),
                is_random: r,
                text_a: a.into(),
                text_b: b.into(),
            })
            .collect();
        let anns = anns
            .iter()
            .map(|&(p, w, l)| Annotation {
                pair_id: PairId(p.into()),
                annotator_id: w.into(),
                label: Label::new(l).unwrap(),
                duration: 5.0,
            })
            .collect();
        LabeledCorpus::new(pairs, anns).unwrap()
    }

    fn labels_corpus(worker_labels: &[(&str, &[i64])]) -> LabeledCorpus {
        let n = worker_labels.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let pairs: Vec<(&str, bool, &str, &str)> = ids.iter().map(|id| (id.as_str(), false, "x", "y")).collect();
        let mut anns = Vec::new();
        for (w, labels) in worker_labels {
            for (i, &l) in labels.iter().enumerate() {
                anns.push((ids[i].as_str(), *w, l));
            }
        }
        build(&pairs, &anns)
    }

    fn lv(labels: &[i64]) -> bool {
        let c = labels_corpus(&[("w", labels)]);
        let p = stats::annotator_profile(&c, &"w".into()).unwrap();
        flag_low_variance(&p, &HeuristicConfig::default())
    }

    #[test]
    fn low_variance_cases() {
        assert!(lv(&[4, 4, 4, 4]));
        assert!(!lv(&[1, 5, 1, 5]));
        assert!(!lv(&[2, 4]));
    }

    #[test]
    fn disagreeable_micro_corpus() {
        // Reduced labels: u and v agree on every pair (unanimous).
        // p0: u,v -> +1, w -> -1 (differs)
        // p1: u,v -> -1, w -> -1 (matches)
        // p2: u,v ->  0, w -> +1 (differs)
        // Hand count: eligible 3, disagreed 2, fraction 2/3 > 0.5.
        let c = labels_corpus(&[("u", &[4, 1, 3]), ("v", &[5, 2, 3]), ("w", &[2, 1, 5])]);
        let t = disagreement_tally(&c, &"w".into());
        assert_eq!(t, DisagreementTally { eligible: 3, disagreed: 2 });
        assert!(flag_disagreeable(&c, &"w".into(), &HeuristicConfig::default()));
        // u always matches the unanimous reduced label of v and w? No: v,w are
        // only unanimous on p1, where u matches.
        let tu = disagreement_tally(&c, &"u".into());
        assert_eq!(tu, DisagreementTally { eligible: 1, disagreed: 0 });
        assert!(!flag_disagreeable(&c, &"u".into(), &HeuristicConfig::default()));
    }

    #[test]
    fn disagreeable_without_unanimous_pairs() {
        // co-annotators always split
        let c = labels_corpus(&[("u", &[1, 5]), ("v", &[5, 1]), ("w", &[3, 3])]);
        assert_eq!(disagreement_tally(&c, &"w".into()).eligible, 0);
        assert!(!flag_disagreeable(&c, &"w".into(), &HeuristicConfig::default()));
        // only one co-annotator
        let c = labels_corpus(&[("u", &[1, 1]), ("w", &[5, 5])]);
        assert!(!flag_disagreeable(&c, &"w".into(), &HeuristicConfig::default()));
    }

    struct AlwaysOverlap;
    impl OverlapScorer for AlwaysOverlap {
        fn overlap(&self, _: &SentencePair) -> f64 {
            1.0
        }
    }

    fn sentiment_case(labels: &[i64]) -> bool {
        let c = labels_corpus(&[("w", labels)]);
        let sentiment = FixedSentiment(1.0, -1.0);
        let scorers = Scorers {
            overlap: &AlwaysOverlap,
            sentiment: &sentiment,
        };
        flag_sentiment_disaligned(&c, &"w".into(), scorers, &HeuristicConfig::default())
    }

    #[test]
    fn sentiment_disaligned_cases() {
        // population variance of {1,5,1} = 32/9 ≈ 3.56
        assert!((stats::population_variance(&[1.0, 5.0, 1.0]).unwrap() - 32.0 / 9.0).abs() < 1e-12);
        assert!(sentiment_case(&[1, 5, 1]));
        assert!(!sentiment_case(&[2, 2, 2]));
        assert!(!sentiment_case(&[1]));
    }

    #[test]
    fn sentiment_probe_needs_overlap_and_gap() {
        let c = build(
            &[
                ("same", false, "I love this pizza", "I love this pizza"),
                ("diff", false, "I love this pizza", "completely other words"),
            ],
            &[],
        );
        let sentiment = FixedSentiment(1.0, -1.0);
        let bleu = SentenceBleu::from_config(&HeuristicConfig::default());
        let scorers = Scorers {
            overlap: &bleu,
            sentiment: &sentiment,
        };
        assert_eq!(sentiment_probe_pairs(&c, scorers, &HeuristicConfig::default()), vec![true, false]);
        let small_gap = FixedSentiment(0.5, -0.5);
        let scorers = Scorers {
            overlap: &bleu,
            sentiment: &small_gap,
        };
        assert_eq!(sentiment_probe_pairs(&c, scorers, &HeuristicConfig::default()), vec![false, false]);
    }

    fn filter(c: &LabeledCorpus, ids: &[HeuristicId]) -> FilteredCorpus {
        let sentiment = FixedSentiment(0.0, 0.0);
        let bleu = SentenceBleu::from_config(&HeuristicConfig::default());
        let scorers = Scorers {
            overlap: &bleu,
            sentiment: &sentiment,
        };
        apply_filters(c, HeuristicSet::of(ids), &HeuristicConfig::default(), scorers)
    }

    #[test]
    fn filtering_removes_constant_annotator() {
        let c = labels_corpus(&[("good", &[1, 5, 2, 4]), ("flat", &[4, 4, 4, 4])]);
        let f = filter(&c, &[HeuristicId::LowVariance]);
        assert_eq!(f.removed, BTreeSet::from(["flat".into()]));
        assert_eq!(f.corpus.annotations().len(), 4);
        assert!(f.corpus.annotations().iter().all(|a| a.annotator_id.0 == "good"));
    }

    #[test]
    fn union_semantics() {
        // "inverted" rates random pairs high but has spread-out labels.
        let c = build(
            &[("r0", true, "a", "b"), ("r1", true, "c", "d"), ("n0", false, "e", "f"), ("n1", false, "g", "h")],
            &[
                ("r0", "inverted", 5),
                ("r1", "inverted", 4),
                ("n0", "inverted", 1),
                ("n1", "inverted", 2),
                ("r0", "ok", 1),
                ("r1", "ok", 1),
                ("n0", "ok", 5),
                ("n1", "ok", 4),
            ],
        );
        let f = filter(&c, &[HeuristicId::LowVariance, HeuristicId::HighRandom]);
        assert_eq!(f.removed, BTreeSet::from(["inverted".into()]));
        let f = filter(&c, &[HeuristicId::LowVariance]);
        assert!(f.removed.is_empty());
    }

    #[test]
    fn reliable_corpus_unchanged_by_all_heuristics() {
        let c = build(
            &[
                ("r0", true, "the cat sat", "stock prices fell"),
                ("n0", false, "a dog barked", "a dog was barking"),
                ("n1", false, "it is raining", "rain is falling"),
                ("n2", false, "he left early", "he departed early"),
            ],
            &[
                ("r0", "u", 1),
                ("r0", "v", 1),
                ("r0", "w", 1),
                ("n0", "u", 5),
                ("n0", "v", 4),
                ("n0", "w", 5),
                ("n1", "u", 3),
                ("n1", "v", 4),
                ("n1", "w", 3),
                ("n2", "u", 5),
                ("n2", "v", 5),
                ("n2", "w", 4),
            ],
        );
        let f = filter(&c, &HeuristicId::ALL);
        assert!(f.removed.is_empty());
        assert_eq!(f.corpus.annotations(), c.annotations());
        assert_eq!(f.surviving_pairs(), 4);
    }

    #[test]
    fn disagreeable_filtering_is_not_idempotent() {
        // "d" dissents on q1 and is removed; that leaves "x" with exactly two
        // co-annotators on p0, who agree against it.
        let c = build(
            &[("q1", false, "a", "b"), ("p0", false, "c", "d")],
            &[
                ("q1", "d", 1),
                ("q1", "a", 5),
                ("q1", "b", 5),
                ("p0", "d", 1),
                ("p0", "x", 5),
                ("p0", "y", 1),
                ("p0", "z", 1),
            ],
        );
        let once = filter(&c, &[HeuristicId::Disagreeable]);
        assert_eq!(once.removed, BTreeSet::from(["d".into()]));
        let twice = filter(&once.corpus, &[HeuristicId::Disagreeable]);
        assert_eq!(twice.removed, BTreeSet::from(["x".into()]));
    }

    proptest::proptest! {
        #[test]
        fn filtering_is_idempotent_without_disagreeable(
            labels in proptest::collection::vec((0usize..6, 0usize..5, 1i64..=5), 1..40),
            bits in 1u8..32,
        ) {
            let subset = HeuristicSet(bits & !(1 << 3));
            proptest::prop_assume!(!subset.is_empty());
            let ids: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
            let workers: Vec<String> = (0..5).map(|i| format!("w{i}")).collect();
            // pairs 0 and 1 are random, 2 is a lexical near-duplicate for heuristic 5
            let pairs: Vec<(&str, bool, &str, &str)> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i < 2, if i == 2 { "same text" } else { "x" }, if i == 2 { "same text" } else { "y" }))
                .collect();
            let mut seen = BTreeSet::new();
            let anns: Vec<(&str, &str, i64)> = labels
                .iter()
                .filter(|(p, w, _)| seen.insert((*p, *w)))
                .map(|&(p, w, l)| (ids[p].as_str(), workers[w].as_str(), l))
                .collect();
            let c = build(&pairs, &anns);
            let sentiment = FixedSentiment(1.0, -1.0);
            let bleu = SentenceBleu::from_config(&HeuristicConfig::default());
            let scorers = Scorers { overlap: &bleu, sentiment: &sentiment };
            let cfg = HeuristicConfig::default();
            let once = apply_filters(&c, subset, &cfg, scorers);
            let twice = apply_filters(&once.corpus, subset, &cfg, scorers);
            proptest::prop_assert!(twice.removed.is_empty());
            proptest::prop_assert_eq!(twice.corpus.annotations(), once.corpus.annotations());
        }
    }
}
