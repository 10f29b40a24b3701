//! Ranking and calibration metrics, and the cross-validation harness.

mod cv;

use serde::Serialize;
use thiserror::Error;

pub use cv::{
    cross_validate, read_reports, stratified_kfold, write_reports, FixedModel, MetricReport, ModelTrainer, Trainer,
    CALIBRATION_BINS,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("both classes must be present")]
    SingleClass,
    #[error("{scores} scores but {labels} labels")]
    Length { scores: usize, labels: usize },
    #[error("score {0} is not a finite number")]
    NonFinite(f64),
    #[error("score {0} lies outside [0, 1]")]
    OutOfRange(f64),
    #[error("labels must be 0 or 1")]
    BadLabel,
    #[error("calibration needs at least one bin")]
    NoBins,
    #[error("calibration table is empty")]
    EmptyTable,
    #[error("need at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("class {class} has {count} members, fewer than the {k} folds")]
    ClassTooSmall { class: u8, count: usize, k: usize },
    #[error("report csv: {0}")]
    Csv(#[from] csv::Error),
}

fn check_pairs(scores: &[f64], labels: &[u8]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::Length { scores: scores.len(), labels: labels.len() });
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite(s));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(MetricsError::BadLabel);
    }
    Ok(())
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve as the Mann-Whitney probability
/// `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricsError> {
    check_pairs(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &y)| y == 1).map(|(r, _)| r).sum();
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// One equal-width probability bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean predicted score; 0 for an empty bin.
    pub mean_score: f64,
    /// Fraction of positives; 0 for an empty bin.
    pub positive_fraction: f64,
    /// Share of all samples falling in the bin.
    pub weight: f64,
}

/// Reliability table over `K` equal-width bins `[(i-1)/K, i/K)`, the last
/// closed at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationTable {
    pub bins: Vec<CalibrationBin>,
    pub total: usize,
}

fn bin_index(s: f64, k: usize) -> usize {
    let kf = k as f64;
    let mut i = ((s * kf).floor() as usize).min(k - 1);
    // guard against rounding in s * K near a bin edge
    if i > 0 && s < i as f64 / kf {
        i -= 1;
    } else if i + 1 < k && s >= (i + 1) as f64 / kf {
        i += 1;
    }
    i
}

pub fn calibration_table(scores: &[f64], labels: &[u8], k: usize) -> Result<CalibrationTable, MetricsError> {
    if k == 0 {
        return Err(MetricsError::NoBins);
    }
    check_pairs(scores, labels)?;
    if let Some(&s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(MetricsError::OutOfRange(s));
    }
    let mut count = vec![0usize; k];
    let mut score_sum = vec![0.0; k];
    let mut pos = vec![0usize; k];
    for (&s, &y) in scores.iter().zip(labels) {
        let i = bin_index(s, k);
        count[i] += 1;
        score_sum[i] += s;
        pos[i] += usize::from(y);
    }
    let total = scores.len();
    let bins = (0..k)
        .map(|i| {
            let c = count[i];
            let (e, o, w) = if c == 0 {
                (0.0, 0.0, 0.0)
            } else {
                (score_sum[i] / c as f64, pos[i] as f64 / c as f64, c as f64 / total as f64)
            };
            CalibrationBin {
                lower: i as f64 / k as f64,
                upper: (i + 1) as f64 / k as f64,
                count: c,
                mean_score: e,
                positive_fraction: o,
                weight: w,
            }
        })
        .collect();
    Ok(CalibrationTable { bins, total })
}

/// Expected calibration error `Σ P(i) |o_i - e_i|`.
pub fn ece(table: &CalibrationTable) -> Result<f64, MetricsError> {
    if table.total == 0 {
        return Err(MetricsError::EmptyTable);
    }
    Ok(table.bins.iter().map(|b| b.weight * (b.positive_fraction - b.mean_score).abs()).sum())
}

/// Maximum calibration error over occupied bins.
pub fn mce(table: &CalibrationTable) -> Result<f64, MetricsError> {
    if table.total == 0 {
        return Err(MetricsError::EmptyTable);
    }
    Ok(table
        .bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.positive_fraction - b.mean_score).abs())
        .fold(0.0, f64::max))
}

/// Fraction of scores that are exactly 0 or exactly 1; 0 for no scores.
pub fn certainty_fraction(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s == 0.0 || s == 1.0).count() as f64 / scores.len() as f64
}
