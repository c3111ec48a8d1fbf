//! Per-annotator aggregates and the Radical/Centrist style classification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatorId, Label, LabelOutOfRange, LabeledCorpus};
use crate::heuristics::disagreement_tally;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("unknown annotator {0}")]
    UnknownAnnotator(AnnotatorId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Style {
    Radical,
    Centrist,
    Mixed,
    Excluded,
}

impl Style {
    pub fn as_str(self) -> &'static str {
        match self {
            Style::Radical => "radical",
            Style::Centrist => "centrist",
            Style::Mixed => "mixed",
            Style::Excluded => "excluded",
        }
    }
}

/// Thresholds for [`classify_style`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleConfig {
    /// Annotators need variance strictly above this to be classified.
    pub min_variance: f64,
    /// A share strictly above this decides the class.
    pub share_threshold: f64,
    /// Compute the inclusion variance over labels other than 3 only.
    pub exclude_neutral_from_variance: bool,
}

impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig {
            min_variance: 1.0,
            share_threshold: 0.5,
            exclude_neutral_from_variance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub annotator_id: AnnotatorId,
    pub n_labels: usize,
    pub mean_duration: f64,
    /// Population variance over all labels.
    pub label_variance: f64,
    /// Population variance over labels other than 3; `None` if every label is 3.
    pub nonneutral_variance: Option<f64>,
    pub mean_random: Option<f64>,
    pub mean_nonrandom: Option<f64>,
    /// Share of {1,5} among labels other than 3.
    pub extreme_share: Option<f64>,
    /// Share of {2,4} among labels other than 3.
    pub central_share: Option<f64>,
    /// Fraction of unanimous co-annotated pairs where this annotator disagreed.
    pub disagreement_rate: Option<f64>,
    pub style: Style,
}

/// Collapse a 1–5 label onto {-1, 0, 1} around the midpoint.
pub fn reduce_label(label: i64) -> Result<i8, LabelOutOfRange> {
    Label::new(label).map(reduce)
}

pub fn reduce(label: Label) -> i8 {
    match label.value() {
        1 | 2 => -1,
        3 => 0,
        _ => 1,
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Population variance; `None` for an empty slice.
pub fn population_variance(xs: &[f64]) -> Option<f64> {
    let m = mean(xs)?;
    Some(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64)
}

pub fn annotator_profile(
    corpus: &LabeledCorpus,
    annotator: &AnnotatorId,
) -> Result<AnnotatorProfile, StatsError> {
    annotator_profile_with(corpus, annotator, &StyleConfig::default())
}

pub fn annotator_profile_with(
    corpus: &LabeledCorpus,
    annotator: &AnnotatorId,
    style_cfg: &StyleConfig,
) -> Result<AnnotatorProfile, StatsError> {
    if !corpus.has_annotator(annotator) {
        return Err(StatsError::UnknownAnnotator(annotator.clone()));
    }
    let mut labels = Vec::new();
    let mut durations = Vec::new();
    let mut random = Vec::new();
    let mut nonrandom = Vec::new();
    for a in corpus.annotations_by(annotator) {
        let l = a.label.as_f64();
        labels.push(l);
        durations.push(a.duration);
        let is_random = corpus
            .pair(&a.pair_id)
            .map(|p| p.is_random)
            .unwrap_or(false);
        if is_random {
            random.push(l);
        } else {
            nonrandom.push(l);
        }
    }
    let nonneutral: Vec<f64> = labels.iter().copied().filter(|&l| l != 3.0).collect();
    let extreme = nonneutral.iter().filter(|&&l| l == 1.0 || l == 5.0).count();
    let (extreme_share, central_share) = if nonneutral.is_empty() {
        (None, None)
    } else {
        let n = nonneutral.len() as f64;
        let e = extreme as f64 / n;
        (Some(e), Some((nonneutral.len() - extreme) as f64 / n))
    };
    let tally = disagreement_tally(corpus, annotator);
    let mut profile = AnnotatorProfile {
        annotator_id: annotator.clone(),
        n_labels: labels.len(),
        mean_duration: mean(&durations).unwrap_or(0.0),
        label_variance: population_variance(&labels).unwrap_or(0.0),
        nonneutral_variance: population_variance(&nonneutral),
        mean_random: mean(&random),
        mean_nonrandom: mean(&nonrandom),
        extreme_share,
        central_share,
        disagreement_rate: tally.rate(),
        style: Style::Excluded,
    };
    profile.style = classify_style_with(&profile, style_cfg);
    Ok(profile)
}

/// Profiles for every annotator, sorted by id.
pub fn all_profiles(corpus: &LabeledCorpus, style_cfg: &StyleConfig) -> Vec<AnnotatorProfile> {
    use rayon::prelude::*;
    let ids: Vec<&AnnotatorId> = corpus.annotators().collect();
    ids.par_iter()
        .map(|id| annotator_profile_with(corpus, id, style_cfg).expect("annotator taken from corpus"))
        .collect()
}

pub fn classify_style(profile: &AnnotatorProfile) -> Style {
    classify_style_with(profile, &StyleConfig::default())
}

pub fn classify_style_with(profile: &AnnotatorProfile, cfg: &StyleConfig) -> Style {
    let variance = if cfg.exclude_neutral_from_variance {
        profile.nonneutral_variance
    } else {
        Some(profile.label_variance)
    };
    let (Some(variance), Some(extreme), Some(central)) =
        (variance, profile.extreme_share, profile.central_share)
    else {
        return Style::Excluded;
    };
    if variance <= cfg.min_variance {
        Style::Excluded
    } else if extreme > cfg.share_threshold {
        Style::Radical
    } else if central > cfg.share_threshold {
        Style::Centrist
    } else {
        Style::Mixed
    }
}
