//! Correlation of metric scores with human labels, before and after
//! filtering, and the report tables built from it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{AnnotatorId, LabeledCorpus, PairId};
use crate::heuristics::{filter_with_flags, flag_all, FlagReport, HeuristicConfig, HeuristicSet, Scorers};
use crate::scoring::ScoreMatrix;
use crate::stats::{all_profiles, Style, StyleConfig};
use crate::textmetrics::Orientation;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorrelationError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("correlation undefined for constant input")]
    ConstantInput,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("score matrix does not match the corpus pairs")]
    ScoreMismatch,
}

/// Human-side value of one pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGold {
    pub pair_id: PairId,
    pub mean_label: f64,
    pub n_annotations: usize,
}

/// Mean label per pair over the annotations present; unannotated pairs are skipped.
pub fn pair_gold(corpus: &LabeledCorpus) -> Vec<PairGold> {
    corpus
        .pairs()
        .iter()
        .enumerate()
        .filter_map(|(idx, pair)| {
            let labels: Vec<f64> = corpus.annotations_for_pair(idx).map(|a| a.label.as_f64()).collect();
            (!labels.is_empty()).then(|| PairGold {
                pair_id: pair.pair_id.clone(),
                mean_label: labels.iter().sum::<f64>() / labels.len() as f64,
                n_annotations: labels.len(),
            })
        })
        .collect()
}

/// Sample Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(CorrelationError::TooFewPoints(xs.len()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson over tie-averaged ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    pearson(&ranks(xs), &ranks(ys))
}

/// What a pair contributes on the human side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldMode {
    /// One point per pair: the mean surviving label.
    #[default]
    PairMean,
    /// One point per surviving annotation.
    PerAnnotation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ReportOptions {
    pub gold: GoldMode,
    /// Restrict to pairs from this source dataset.
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// More than half of the pairs have no metric value.
    Unavailable,
    ConstantInput,
    TooFewPairs,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Unavailable => "unavailable",
            CellStatus::ConstantInput => "constant_input",
            CellStatus::TooFewPairs => "too_few_pairs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    /// Pairs entering the correlation.
    pub n_pairs: usize,
    /// Pairs with a gold value but no metric value.
    pub undefined: usize,
    pub status: CellStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCell {
    pub subset: HeuristicSet,
    pub cell: Cell,
    /// `(value - baseline) / |baseline| * 100` of the Pearson values.
    pub percent_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub metric: String,
    pub orientation: Orientation,
    pub baseline: Cell,
    pub subsets: Vec<SubsetCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetSummary {
    pub subset: HeuristicSet,
    pub annotators_removed: usize,
    pub annotations_removed: usize,
    pub surviving_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub label: String,
    /// Why the report is empty, when it is.
    pub status: Option<String>,
    pub config: HeuristicConfig,
    pub options: ReportOptions,
    pub baseline_pairs: usize,
    pub subsets: Vec<SubsetSummary>,
    pub rows: Vec<MetricRow>,
}

pub fn percent_change(value: f64, baseline: f64) -> f64 {
    (value - baseline) / baseline.abs() * 100.0
}

fn in_scope(opts: &ReportOptions, corpus: &LabeledCorpus, idx: usize) -> bool {
    opts.source
        .as_ref()
        .is_none_or(|s| &corpus.pairs()[idx].source == s)
}

/// Correlation of every score column with the labels of `corpus`.
fn correlate_corpus(corpus: &LabeledCorpus, scores: &ScoreMatrix, opts: &ReportOptions) -> (Vec<Cell>, usize) {
    // (pair index, label value) points on the human side
    let mut points: Vec<(usize, f64)> = Vec::new();
    let mut gold_pairs = 0usize;
    for idx in (0..corpus.pairs().len()).filter(|&i| in_scope(opts, corpus, i)) {
        let labels: Vec<f64> = corpus.annotations_for_pair(idx).map(|a| a.label.as_f64()).collect();
        if labels.is_empty() {
            continue;
        }
        gold_pairs += 1;
        match opts.gold {
            GoldMode::PairMean => points.push((idx, labels.iter().sum::<f64>() / labels.len() as f64)),
            GoldMode::PerAnnotation => points.extend(labels.into_iter().map(|l| (idx, l))),
        }
    }
    let cells = scores
        .columns
        .iter()
        .map(|col| {
            let undefined = points
                .iter()
                .map(|&(i, _)| i)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .filter(|&i| col.values[i].is_none())
                .count();
            let (xs, ys): (Vec<f64>, Vec<f64>) = points
                .iter()
                .filter_map(|&(i, y)| col.oriented(i).map(|x| (x, y)))
                .unzip();
            let n_pairs = match opts.gold {
                GoldMode::PairMean => xs.len(),
                GoldMode::PerAnnotation => gold_pairs - undefined,
            };
            let mut cell = Cell {
                pearson: None,
                spearman: None,
                n_pairs,
                undefined,
                status: CellStatus::Ok,
            };
            if gold_pairs > 0 && 2 * undefined > gold_pairs {
                cell.status = CellStatus::Unavailable;
                return cell;
            }
            match pearson(&xs, &ys) {
                Ok(r) => {
                    cell.pearson = Some(r);
                    cell.spearman = spearman(&xs, &ys).ok();
                }
                Err(CorrelationError::ConstantInput) => cell.status = CellStatus::ConstantInput,
                Err(_) => cell.status = CellStatus::TooFewPairs,
            }
            cell
        })
        .collect();
    (cells, gold_pairs)
}

fn check_matrix(corpus: &LabeledCorpus, scores: &ScoreMatrix) -> Result<(), ReportError> {
    let same = scores.pair_ids.len() == corpus.pairs().len()
        && scores.pair_ids.iter().zip(corpus.pairs()).all(|(id, p)| id == &p.pair_id)
        && scores.columns.iter().all(|c| c.values.len() == scores.pair_ids.len());
    if same {
        Ok(())
    } else {
        Err(ReportError::ScoreMismatch)
    }
}

/// Baseline and per-subset correlations with flags computed on `corpus`.
pub fn correlation_report(
    corpus: &LabeledCorpus,
    scores: &ScoreMatrix,
    subsets: &[HeuristicSet],
    cfg: &HeuristicConfig,
    scorers: Scorers<'_>,
    opts: &ReportOptions,
) -> Result<CorrelationReport, ReportError> {
    let flags = flag_all(corpus, cfg, scorers);
    correlation_report_with_flags(corpus, scores, &flags, subsets, cfg, opts, "all annotators")
}

/// Like [`correlation_report`] with flags computed beforehand, possibly on a
/// larger corpus than `corpus`.
pub fn correlation_report_with_flags(
    corpus: &LabeledCorpus,
    scores: &ScoreMatrix,
    flags: &[FlagReport],
    subsets: &[HeuristicSet],
    cfg: &HeuristicConfig,
    opts: &ReportOptions,
    label: &str,
) -> Result<CorrelationReport, ReportError> {
    check_matrix(corpus, scores)?;
    let (baseline, baseline_pairs) = correlate_corpus(corpus, scores, opts);
    let mut rows: Vec<MetricRow> = scores
        .columns
        .iter()
        .zip(baseline)
        .map(|(col, cell)| MetricRow {
            metric: col.name.clone(),
            orientation: col.orientation,
            baseline: cell,
            subsets: Vec::with_capacity(subsets.len()),
        })
        .collect();
    let mut summaries = Vec::with_capacity(subsets.len());
    for &subset in subsets {
        let filtered = filter_with_flags(corpus, flags, subset);
        let (cells, surviving_pairs) = correlate_corpus(&filtered.corpus, scores, opts);
        summaries.push(SubsetSummary {
            subset,
            annotators_removed: filtered.removed.iter().filter(|a| corpus.has_annotator(a)).count(),
            annotations_removed: corpus.annotations().len() - filtered.corpus.annotations().len(),
            surviving_pairs,
        });
        for (row, cell) in rows.iter_mut().zip(cells) {
            let percent = match (row.baseline.pearson, cell.pearson) {
                (Some(b), Some(v)) if b != 0.0 => Some(percent_change(v, b)),
                _ => None,
            };
            row.subsets.push(SubsetCell {
                subset,
                cell,
                percent_change: percent,
            });
        }
    }
    Ok(CorrelationReport {
        label: label.to_string(),
        status: None,
        config: cfg.clone(),
        options: opts.clone(),
        baseline_pairs,
        subsets: summaries,
        rows,
    })
}

/// Separate reports over the labels of Radical and of Centrist annotators.
///
/// Styles are classified on the full corpus and flags are computed on the
/// full corpus, then applied within each style's labels.
pub fn style_split_report(
    corpus: &LabeledCorpus,
    scores: &ScoreMatrix,
    flags: &[FlagReport],
    subsets: &[HeuristicSet],
    cfg: &HeuristicConfig,
    style_cfg: &StyleConfig,
    opts: &ReportOptions,
) -> Result<(CorrelationReport, CorrelationReport), ReportError> {
    check_matrix(corpus, scores)?;
    let profiles = all_profiles(corpus, style_cfg);
    let one = |style: Style| -> Result<CorrelationReport, ReportError> {
        let members: BTreeSet<&AnnotatorId> = profiles
            .iter()
            .filter(|p| p.style == style)
            .map(|p| &p.annotator_id)
            .collect();
        let label = format!("{} annotators", style.as_str());
        if members.is_empty() {
            return Ok(CorrelationReport {
                label,
                status: Some(format!("no {} annotators in the corpus", style.as_str())),
                config: cfg.clone(),
                options: opts.clone(),
                baseline_pairs: 0,
                subsets: Vec::new(),
                rows: Vec::new(),
            });
        }
        let own = corpus.retain_annotations(|a| members.contains(&a.annotator_id));
        correlation_report_with_flags(&own, scores, flags, subsets, cfg, opts, &label)
    };
    Ok((one(Style::Radical)?, one(Style::Centrist)?))
}

/// Output encodings of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Text,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (report, metric, subset); the baseline has subset `baseline`.
pub fn render_csv(reports: &[&CorrelationReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "report",
        "metric",
        "orientation",
        "subset",
        "pearson",
        "spearman",
        "percent_change",
        "n_pairs",
        "undefined",
        "annotators_removed",
        "status",
    ];
    w.write_record(header).expect("in-memory write");
    for report in reports {
        if let Some(status) = &report.status {
            w.write_record([report.label.as_str(), "", "", "", "", "", "", "0", "0", "0", status.as_str()])
                .expect("in-memory write");
            continue;
        }
        for row in &report.rows {
            let orientation = match row.orientation {
                Orientation::Similarity => "similarity",
                Orientation::Distance => "distance",
            };
            let b = &row.baseline;
            w.write_record([
                report.label.as_str(),
                &row.metric,
                orientation,
                "baseline",
                &opt(b.pearson),
                &opt(b.spearman),
                "",
                &b.n_pairs.to_string(),
                &b.undefined.to_string(),
                "0",
                b.status.as_str(),
            ])
            .expect("in-memory write");
            for (sc, summary) in row.subsets.iter().zip(&report.subsets) {
                w.write_record([
                    report.label.as_str(),
                    &row.metric,
                    orientation,
                    &sc.subset.to_string(),
                    &opt(sc.cell.pearson),
                    &opt(sc.cell.spearman),
                    &opt(sc.percent_change),
                    &sc.cell.n_pairs.to_string(),
                    &sc.cell.undefined.to_string(),
                    &summary.annotators_removed.to_string(),
                    sc.cell.status.as_str(),
                ])
                .expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

pub fn render_json(reports: &[&CorrelationReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("report serializes");
    s.push('\n');
    s
}

fn text_cell(cell: &Cell, percent: Option<f64>) -> String {
    match (cell.pearson, percent) {
        (Some(v), Some(p)) => {
            // rounding can leave "-0.00"
            let p = if (p * 100.0).round() == 0.0 { 0.0 } else { p };
            format!("{v:.2} ({p:+.2}%)")
        }
        (Some(v), None) => format!("{v:.2}"),
        (None, _) => cell.status.as_str().to_string(),
    }
}

/// Aligned table: metric rows, baseline then one column per subset.
pub fn render_text(reports: &[&CorrelationReport]) -> String {
    let mut out = String::new();
    for (n, report) in reports.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {} ({} pairs)", report.label, report.baseline_pairs);
        if let Some(status) = &report.status {
            let _ = writeln!(out, "{status}");
            continue;
        }
        let mut table: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["metric".to_string(), "baseline".to_string()];
        header.extend(report.subsets.iter().map(|s| s.subset.to_string()));
        table.push(header);
        for row in &report.rows {
            let mut line = vec![row.metric.clone(), text_cell(&row.baseline, None)];
            line.extend(row.subsets.iter().map(|s| text_cell(&s.cell, s.percent_change)));
            table.push(line);
        }
        let mut removed = vec!["removed".to_string(), "0".to_string()];
        removed.extend(report.subsets.iter().map(|s| s.annotators_removed.to_string()));
        table.push(removed);

        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        for line in &table {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (v, &w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
    }
    out
}

pub fn render(reports: &[&CorrelationReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::Json => render_json(reports),
        ReportFormat::Text => render_text(reports),
    }
}
