use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::metrics::average_ranks;
use crate::special::normal_sf;

/// Largest number of nonzero differences for which the exact null
/// distribution is computed; above it a normal approximation is used.
pub const EXACT_LIMIT: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(R⁺, R⁻)`.
    pub t: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Number of differences ranked, after dropping one zero when the zero
    /// count is odd.
    pub n_effective: usize,
    pub exact: bool,
    /// Every difference was zero; `p` is 1 by convention.
    pub degenerate: bool,
}

/// Wilcoxon signed-rank test on paired differences.
///
/// Absolute differences are ranked with ties averaged. Zero differences
/// keep their ranks, split half to each of `R⁺` and `R⁻`; if their number
/// is odd one of them is discarded first. The two-sided p-value is
/// `P(|R⁺ - μ| >= |r⁺ - μ|)` under random signs on the nonzero
/// differences, computed exactly by dynamic programming over the (doubled,
/// hence integral) ranks when there are at most [`EXACT_LIMIT`] of them.
pub fn wilcoxon_signed_rank(d: &[f64]) -> Result<WilcoxonResult, StatsError> {
    if d.is_empty() {
        return Err(StatsError::TooFew { what: "differences", need: 1, got: 0 });
    }
    if let Some(&v) = d.iter().find(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(v));
    }
    let zeros = d.iter().filter(|&&v| v == 0.0).count();
    let mut kept: Vec<f64> = d.to_vec();
    if zeros % 2 == 1 {
        let at = kept.iter().position(|&v| v == 0.0).expect("zero present");
        kept.remove(at);
    }
    let n = kept.len();
    let abs: Vec<f64> = kept.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);

    let mut r_plus = 0.0;
    let mut r_minus = 0.0;
    let mut nonzero = Vec::new();
    let mut observed = 0.0;
    for (v, r) in kept.iter().zip(&ranks) {
        if *v > 0.0 {
            r_plus += r;
            observed += r;
            nonzero.push(*r);
        } else if *v < 0.0 {
            r_minus += r;
            nonzero.push(*r);
        } else {
            r_plus += r / 2.0;
            r_minus += r / 2.0;
        }
    }
    let mut out = WilcoxonResult {
        t: r_plus.min(r_minus),
        r_plus,
        r_minus,
        p: 1.0,
        n_effective: n,
        exact: true,
        degenerate: nonzero.is_empty(),
    };
    if out.degenerate {
        return Ok(out);
    }
    if nonzero.len() <= EXACT_LIMIT {
        out.p = exact_two_sided(&nonzero, observed);
    } else {
        out.exact = false;
        let mu = nonzero.iter().sum::<f64>() / 2.0;
        let sd = (nonzero.iter().map(|r| r * r).sum::<f64>() / 4.0).sqrt();
        let z = ((observed - mu).abs() - 0.5).max(0.0) / sd;
        out.p = (2.0 * normal_sf(z)).min(1.0);
    }
    Ok(out)
}

/// Null distribution of the doubled positive-rank sum: `dist[s]` is the
/// probability that the doubled ranks carrying a plus sign sum to `s`.
fn signed_rank_distribution(doubled: &[usize]) -> Vec<f64> {
    let total: usize = doubled.iter().sum();
    let mut dist = vec![0.0; total + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for &r in doubled {
        reach += r;
        for s in (0..=reach).rev() {
            let with = if s >= r { dist[s - r] } else { 0.0 };
            dist[s] = 0.5 * (dist[s] + with);
        }
    }
    dist
}

fn doubled(ranks: &[f64]) -> Vec<usize> {
    // average ranks are multiples of 1/2
    ranks.iter().map(|r| (2.0 * r).round() as usize).collect()
}

fn exact_two_sided(ranks: &[f64], observed_plus: f64) -> f64 {
    let doubled = doubled(ranks);
    let total: usize = doubled.iter().sum();
    let dist = signed_rank_distribution(&doubled);
    let obs = (2.0 * observed_plus).round() as i64;
    // compare |2s - total| on the doubled scale so everything stays integral
    let dev = (2 * obs - total as i64).abs();
    let p: f64 = dist
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total as i64).abs() >= dev)
        .map(|(_, q)| q)
        .sum();
    p.min(1.0)
}

/// Largest `T` such that the exact two-sided test on `n` untied nonzero
/// differences rejects at level `alpha` whenever `min(R⁺, R⁻) <= T`.
/// `None` when even `T = 0` is not significant or `n` exceeds
/// [`EXACT_LIMIT`].
pub fn wilcoxon_critical_value(n: usize, alpha: f64) -> Result<Option<u64>, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if n == 0 || n > EXACT_LIMIT {
        return Ok(None);
    }
    let ranks: Vec<f64> = (1..=n).map(|r| r as f64).collect();
    let dist = signed_rank_distribution(&doubled(&ranks));
    let total = n * (n + 1) / 2;
    // P(min(R+, R-) <= t) = 2 P(R+ <= t) for t below the centre
    let mut lower = 0.0;
    let mut best = None;
    for t in 0..total {
        if 2 * t >= total {
            break;
        }
        lower += dist[2 * t];
        if 2.0 * lower <= alpha {
            best = Some(t as u64);
        } else {
            break;
        }
    }
    Ok(best)
}
