//! Multi-classifier comparison: Friedman and Iman-Davenport omnibus tests,
//! pairwise Wilcoxon signed-rank tests with Holm's step-down correction,
//! Hodges-Lehmann pseudomedians, and the trinomial preference test.

mod compare;
mod matrix;
mod trinomial;
mod wilcoxon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::average_ranks;
use crate::special::f_sf;

pub use compare::{compare, ComparisonReport, GraphNode, Omnibus, PairwiseRow};
pub use matrix::{Metric, ScoreMatrix};
pub use trinomial::{trinomial_critical_value, trinomial_pmf, trinomial_test, TrinomialResult};
pub use wilcoxon::{wilcoxon_critical_value, wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("Friedman statistic {chi2} reaches its bound N(k-1) = {bound}; the Iman-Davenport correction is undefined")]
    Saturated { chi2: f64, bound: f64 },
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("trinomial test needs at least one observation")]
    NoObservations,
    #[error("score matrix: {0}")]
    Matrix(String),
    #[error("score matrix csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Whether larger scores are better (AUC) or smaller ones (ECE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    HigherBetter,
    LowerBetter,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "higher-better" | "higher" | "max" => Ok(Self::HigherBetter),
            "lower-better" | "lower" | "min" => Ok(Self::LowerBetter),
            other => Err(format!("unknown direction `{other}` (expected higher-better or lower-better)")),
        }
    }
}

/// Ranks of the classifiers' scores on one dataset; rank 1 is best and ties
/// share the mean of their ranks.
pub fn rank_rows(scores: &[f64], direction: Direction) -> Vec<f64> {
    match direction {
        Direction::LowerBetter => average_ranks(scores),
        Direction::HigherBetter => {
            let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
            average_ranks(&neg)
        }
    }
}

/// Friedman statistic `12N/(k(k+1)) [Σ R_i² - k(k+1)²/4]` from a `k × N`
/// rank matrix (`ranks[i][j]` is classifier `i` on dataset `j`).
pub fn friedman(ranks: &[Vec<f64>]) -> f64 {
    let k = ranks.len() as f64;
    let n = ranks.first().map_or(0, Vec::len) as f64;
    let sum_sq: f64 = ranks
        .iter()
        .map(|row| {
            let r = row.iter().sum::<f64>() / n;
            r * r
        })
        .sum();
    12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0)
}

/// Iman-Davenport correction `F = (N-1)χ² / (N(k-1) - χ²)` and its upper
/// tail probability under `F(k-1, (k-1)(N-1))`.
pub fn iman_davenport(chi2: f64, n: usize, k: usize) -> Result<(f64, f64), StatsError> {
    if n < 2 {
        return Err(StatsError::TooFew { what: "datasets", need: 2, got: n });
    }
    if k < 2 {
        return Err(StatsError::TooFew { what: "classifiers", need: 2, got: k });
    }
    let (nf, kf) = (n as f64, k as f64);
    let bound = nf * (kf - 1.0);
    if chi2 >= bound {
        return Err(StatsError::Saturated { chi2, bound });
    }
    // tiny negative values come from cancellation when all ranks tie
    let chi2 = chi2.max(0.0);
    let f = (nf - 1.0) * chi2 / (bound - chi2);
    Ok((f, f_sf(f, kf - 1.0, (kf - 1.0) * (nf - 1.0))))
}

/// Holm's step-down procedure. Returns, in input order, whether each null
/// hypothesis is rejected at family-wise level `alpha`.
pub fn holm(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut reject = vec![false; m];
    for (i, &idx) in order.iter().enumerate() {
        if p_values[idx] <= alpha / (m - i) as f64 {
            reject[idx] = true;
        } else {
            break;
        }
    }
    reject
}

/// Holm-adjusted p-values, `max_{j<=i} min(1, (m-j+1) p_(j))`, in input
/// order. `holm(p, α)[i]` is equivalent to `adjusted[i] <= α`.
pub fn holm_adjusted(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (i, &idx) in order.iter().enumerate() {
        running = running.max(((m - i) as f64 * p_values[idx]).min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}

/// Hodges-Lehmann pseudomedian: the median of all Walsh averages
/// `(d_i + d_j)/2`, `i <= j`.
pub fn hodges_lehmann(d: &[f64]) -> Result<f64, StatsError> {
    if d.is_empty() {
        return Err(StatsError::TooFew { what: "differences", need: 1, got: 0 });
    }
    if let Some(&v) = d.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(v));
    }
    let mut w = Vec::with_capacity(d.len() * (d.len() + 1) / 2);
    for i in 0..d.len() {
        for j in i..d.len() {
            w.push((d[i] + d[j]) / 2.0);
        }
    }
    w.sort_by(f64::total_cmp);
    let n = w.len();
    Ok(if n % 2 == 1 { w[n / 2] } else { (w[n / 2 - 1] + w[n / 2]) / 2.0 })
}
