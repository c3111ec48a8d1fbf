//! Synthetic corpora with planted annotator behaviour, used as ground truth
//! for the heuristics and the correlation pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Annotation, AnnotatorId, Label, LabeledCorpus, PairId, SentencePair};
use crate::heuristics::{FlagReport, HeuristicId};

/// Noise used by the profiles that label like a reliable annotator first.
const BASE_NOISE_SD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("invalid population spec: {0}")]
    Invalid(String),
    #[error("cannot read population spec {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

/// Planted annotator behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    /// `round(1 + 4t + N(0, noise_sd))` clipped to 1..=5.
    Reliable { noise_sd: f64 },
    ConstantLabel { label: u8 },
    UniformRandom,
    /// Reliable labels with durations averaging `mean_duration` seconds.
    Slow { mean_duration: f64 },
    /// Reliable labels; each 2 or 4 moves to 1 or 5 with probability `sharpness`.
    Radical { sharpness: f64 },
    /// Reliable labels; each 1 or 5 moves to 2 or 4 with probability `compression`.
    Centrist { compression: f64 },
}

impl ProfileKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileKind::Reliable { .. } => "reliable",
            ProfileKind::ConstantLabel { .. } => "constant_label",
            ProfileKind::UniformRandom => "uniform_random",
            ProfileKind::Slow { .. } => "slow",
            ProfileKind::Radical { .. } => "radical",
            ProfileKind::Centrist { .. } => "centrist",
        }
    }

    fn parameter(&self) -> Option<f64> {
        match *self {
            ProfileKind::Reliable { noise_sd } => Some(noise_sd),
            ProfileKind::ConstantLabel { label } => Some(f64::from(label)),
            ProfileKind::UniformRandom => None,
            ProfileKind::Slow { mean_duration } => Some(mean_duration),
            ProfileKind::Radical { sharpness } => Some(sharpness),
            ProfileKind::Centrist { compression } => Some(compression),
        }
    }

    fn validate(&self) -> Result<(), SimulateError> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(SimulateError::Invalid(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            ProfileKind::Reliable { noise_sd } if !(noise_sd >= 0.0 && noise_sd.is_finite()) => Err(
                SimulateError::Invalid(format!("noise_sd must be non-negative, got {noise_sd}")),
            ),
            ProfileKind::ConstantLabel { label } if !(1..=5).contains(&label) => {
                Err(SimulateError::Invalid(format!("constant label must be 1..5, got {label}")))
            }
            ProfileKind::Slow { mean_duration } if !(mean_duration > 0.0 && mean_duration.is_finite()) => Err(
                SimulateError::Invalid(format!("mean_duration must be positive, got {mean_duration}")),
            ),
            ProfileKind::Radical { sharpness } => unit("sharpness", sharpness),
            ProfileKind::Centrist { compression } => unit("compression", compression),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parameter() {
            Some(p) => write!(f, "{}({p})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    #[serde(flatten)]
    pub kind: ProfileKind,
    pub count: usize,
}

fn default_annotators_per_pair() -> usize {
    3
}

fn default_sentence_length() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub n_pairs: usize,
    pub fraction_random_pairs: f64,
    pub profiles: Vec<ProfileSpec>,
    pub seed: u64,
    #[serde(default = "default_annotators_per_pair")]
    pub annotators_per_pair: usize,
    /// Tokens per synthetic sentence.
    #[serde(default = "default_sentence_length")]
    pub sentence_length: usize,
}

impl PopulationSpec {
    /// 500 pairs (20% random), 60 annotators: 12 constant, 12 uniform
    /// random and 36 reliable with noise 0.5.
    pub fn contaminated(seed: u64) -> Self {
        PopulationSpec {
            n_pairs: 500,
            fraction_random_pairs: 0.2,
            profiles: vec![
                ProfileSpec {
                    kind: ProfileKind::ConstantLabel { label: 4 },
                    count: 12,
                },
                ProfileSpec {
                    kind: ProfileKind::UniformRandom,
                    count: 12,
                },
                ProfileSpec {
                    kind: ProfileKind::Reliable { noise_sd: 0.5 },
                    count: 36,
                },
            ],
            seed,
            annotators_per_pair: default_annotators_per_pair(),
            sentence_length: default_sentence_length(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, SimulateError> {
        let read_err = |message: String| SimulateError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let spec: PopulationSpec = serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_annotators(&self) -> usize {
        self.profiles.iter().map(|p| p.count).sum()
    }

    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.n_pairs == 0 {
            return Err(SimulateError::Invalid("n_pairs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fraction_random_pairs) {
            return Err(SimulateError::Invalid(format!(
                "fraction_random_pairs must lie in [0, 1], got {}",
                self.fraction_random_pairs
            )));
        }
        if self.profiles.is_empty() || self.profiles.iter().any(|p| p.count == 0) {
            return Err(SimulateError::Invalid("every profile needs a positive count".into()));
        }
        for p in &self.profiles {
            p.kind.validate()?;
        }
        if self.annotators_per_pair == 0 || self.annotators_per_pair > self.n_annotators() {
            return Err(SimulateError::Invalid(format!(
                "annotators_per_pair must lie in 1..={}, got {}",
                self.n_annotators(),
                self.annotators_per_pair
            )));
        }
        if self.sentence_length == 0 {
            return Err(SimulateError::Invalid("sentence_length must be positive".into()));
        }
        Ok(())
    }
}

/// What was planted: each annotator's kind and each pair's latent similarity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub annotator_kinds: BTreeMap<AnnotatorId, ProfileKind>,
    pub latent: BTreeMap<PairId, f64>,
}

const ONSETS: [char; 14] = ['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z'];
const VOWELS: [char; 5] = ['a', 'e', 'i', 'o', 'u'];

/// Pronounceable nonce word for an index; distinct indices give distinct words.
fn nonce_word(mut k: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    let mut out = String::new();
    for _ in 0..4 {
        let s = k % base;
        out.push(ONSETS[s / VOWELS.len()]);
        out.push(VOWELS[s % VOWELS.len()]);
        k /= base;
    }
    debug_assert_eq!(k, 0, "word index out of range");
    out
}

fn reliable_label(t: f64, sd: f64, rng: &mut ChaCha8Rng) -> u8 {
    let noise = if sd > 0.0 {
        Normal::new(0.0, sd).expect("sd validated").sample(rng)
    } else {
        0.0
    };
    (1.0 + 4.0 * t + noise).round().clamp(1.0, 5.0) as u8
}

fn draw_label(kind: ProfileKind, t: f64, rng: &mut ChaCha8Rng) -> u8 {
    match kind {
        ProfileKind::Reliable { noise_sd } => reliable_label(t, noise_sd, rng),
        ProfileKind::ConstantLabel { label } => label,
        ProfileKind::UniformRandom => rng.random_range(1..=5),
        ProfileKind::Slow { .. } => reliable_label(t, BASE_NOISE_SD, rng),
        ProfileKind::Radical { sharpness } => match reliable_label(t, BASE_NOISE_SD, rng) {
            2 if rng.random_bool(sharpness) => 1,
            4 if rng.random_bool(sharpness) => 5,
            l => l,
        },
        ProfileKind::Centrist { compression } => match reliable_label(t, BASE_NOISE_SD, rng) {
            1 if rng.random_bool(compression) => 2,
            5 if rng.random_bool(compression) => 4,
            l => l,
        },
    }
}

fn draw_duration(kind: ProfileKind, rng: &mut ChaCha8Rng) -> f64 {
    match kind {
        ProfileKind::Slow { mean_duration } => rng.random_range(0.5 * mean_duration..=1.5 * mean_duration),
        _ => rng.random_range(5.0..=60.0),
    }
}

/// Builds a corpus from `spec`; a pure function of the spec and its seed.
///
/// Non-random pairs get a latent similarity `t ~ U[0.2, 1]`, random pairs
/// `t ~ U[0, 0.1]`. The second sentence repeats the first `round(t * L)`
/// tokens of the first sentence and fills the rest with fresh nonce words, so
/// lexical overlap grows with `t`.
pub fn generate_corpus(spec: &PopulationSpec) -> Result<(LabeledCorpus, GroundTruth), SimulateError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_pairs;
    let n_random = (n as f64 * spec.fraction_random_pairs).round() as usize;
    let mut is_random = vec![false; n];
    for i in index::sample(&mut rng, n, n_random) {
        is_random[i] = true;
    }

    let len = spec.sentence_length;
    let mut next_word = 0usize;
    let mut fresh = |count: usize| -> Vec<String> {
        let words = (next_word..next_word + count).map(nonce_word).collect();
        next_word += count;
        words
    };
    let width = n.to_string().len();
    let mut pairs = Vec::with_capacity(n);
    let mut latent = BTreeMap::new();
    for (i, &random) in is_random.iter().enumerate() {
        let t = if random {
            rng.random_range(0.0..=0.1)
        } else {
            rng.random_range(0.2..=1.0)
        };
        let a = fresh(len);
        let shared = (t * len as f64).round() as usize;
        let mut b: Vec<String> = a[..shared].to_vec();
        b.extend(fresh(len - shared));
        let pair_id = PairId(format!("s{i:0width$}"));
        latent.insert(pair_id.clone(), t);
        pairs.push(SentencePair {
            pair_id,
            source: "synthetic".into(),
            is_random: random,
            text_a: a.join(" "),
            text_b: b.join(" "),
        });
    }

    let kinds: Vec<ProfileKind> = spec
        .profiles
        .iter()
        .flat_map(|p| std::iter::repeat_n(p.kind, p.count))
        .collect();
    let awidth = kinds.len().to_string().len().max(3);
    let ids: Vec<AnnotatorId> = (0..kinds.len())
        .map(|k| AnnotatorId(format!("w{:0awidth$}", k + 1)))
        .collect();

    let mut annotations = Vec::with_capacity(n * spec.annotators_per_pair);
    for pair in &pairs {
        let t = latent[&pair.pair_id];
        let mut chosen = index::sample(&mut rng, kinds.len(), spec.annotators_per_pair).into_vec();
        chosen.sort_unstable();
        for k in chosen {
            let label = draw_label(kinds[k], t, &mut rng);
            let duration = draw_duration(kinds[k], &mut rng);
            annotations.push(Annotation {
                pair_id: pair.pair_id.clone(),
                annotator_id: ids[k].clone(),
                label: Label::new(i64::from(label)).expect("labels drawn in 1..=5"),
                duration,
            });
        }
    }

    let corpus = LabeledCorpus::new(pairs, annotations).expect("generated corpus is valid");
    let truth = GroundTruth {
        annotator_kinds: ids.into_iter().zip(kinds).collect(),
        latent,
    };
    Ok((corpus, truth))
}

/// Writes the truth sidecars: `annotator_id,planted_kind,parameter` and
/// `pair_id,latent_t`.
pub fn write_ground_truth(truth: &GroundTruth, annotators_path: &Path, pairs_path: &Path) -> Result<(), SimulateError> {
    let write_err = |path: &Path, e: &dyn fmt::Display| SimulateError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(annotators_path).map_err(|e| write_err(annotators_path, &e))?;
    w.write_record(["annotator_id", "planted_kind", "parameter"])
        .map_err(|e| write_err(annotators_path, &e))?;
    for (id, kind) in &truth.annotator_kinds {
        let param = kind.parameter().map(|p| p.to_string()).unwrap_or_default();
        w.write_record([id.0.as_str(), kind.name(), &param])
            .map_err(|e| write_err(annotators_path, &e))?;
    }
    w.flush().map_err(|e| write_err(annotators_path, &e))?;

    let mut w = csv::Writer::from_path(pairs_path).map_err(|e| write_err(pairs_path, &e))?;
    w.write_record(["pair_id", "latent_t"]).map_err(|e| write_err(pairs_path, &e))?;
    for (id, t) in &truth.latent {
        w.write_record([id.0.as_str(), &t.to_string()])
            .map_err(|e| write_err(pairs_path, &e))?;
    }
    w.flush().map_err(|e| write_err(pairs_path, &e))?;
    Ok(())
}

/// How one heuristic fares against one planted kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionCell {
    pub kind: &'static str,
    pub heuristic: HeuristicId,
    /// Annotators of this kind.
    pub members: usize,
    /// Annotators of this kind the heuristic flagged.
    pub flagged_members: usize,
    /// Annotators of any kind the heuristic flagged.
    pub flagged_total: usize,
}

impl ConfusionCell {
    /// Share of flagged annotators that are of this kind.
    pub fn precision(&self) -> Option<f64> {
        (self.flagged_total > 0).then(|| self.flagged_members as f64 / self.flagged_total as f64)
    }

    /// Share of this kind that was flagged; for reliable annotators, the
    /// false-positive rate.
    pub fn recall(&self) -> Option<f64> {
        (self.members > 0).then(|| self.flagged_members as f64 / self.members as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ConfusionTable {
    pub cells: Vec<ConfusionCell>,
}

impl ConfusionTable {
    pub fn cell(&self, kind: &str, heuristic: HeuristicId) -> Option<&ConfusionCell> {
        self.cells.iter().find(|c| c.kind == kind && c.heuristic == heuristic)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "planted_kind",
            "heuristic",
            "members",
            "flagged_members",
            "flagged_total",
            "precision",
            "recall",
        ])
        .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.kind,
                c.heuristic.name(),
                &c.members.to_string(),
                &c.flagged_members.to_string(),
                &c.flagged_total.to_string(),
                &opt(c.precision()),
                &opt(c.recall()),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Precision and recall of each heuristic against each planted kind present.
pub fn heuristic_confusion(truth: &GroundTruth, flags: &[FlagReport]) -> ConfusionTable {
    let mut kinds: Vec<&'static str> = truth.annotator_kinds.values().map(ProfileKind::name).collect();
    kinds.sort_unstable();
    kinds.dedup();
    let flagged_by = |h: HeuristicId| -> Vec<&AnnotatorId> {
        flags
            .iter()
            .filter(|f| f.flags.contains(h))
            .map(|f| &f.annotator_id)
            .collect()
    };
    let mut cells = Vec::new();
    for &kind in &kinds {
        let members = truth.annotator_kinds.values().filter(|k| k.name() == kind).count();
        for h in HeuristicId::ALL {
            let flagged = flagged_by(h);
            let flagged_members = flagged
                .iter()
                .filter(|id| truth.annotator_kinds.get(*id).is_some_and(|k| k.name() == kind))
                .count();
            cells.push(ConfusionCell {
                kind,
                heuristic: h,
                members,
                flagged_members,
                flagged_total: flagged.len(),
            });
        }
    }
    ConfusionTable { cells }
}
