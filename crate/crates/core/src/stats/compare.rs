use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    friedman, hodges_lehmann, holm, holm_adjusted, iman_davenport, wilcoxon_signed_rank, Direction, ScoreMatrix,
    StatsError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Omnibus {
    pub chi2: f64,
    /// Iman-Davenport statistic; `None` when the Friedman statistic is at
    /// its upper bound (every dataset ranks the classifiers identically).
    pub f: Option<f64>,
    /// Upper-tail p-value of `f`; 0 in the saturated case.
    pub p: f64,
    pub saturated: bool,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub row: String,
    pub column: String,
    pub t: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    /// Unadjusted two-sided p-value.
    pub p: f64,
    /// Holm-adjusted p-value over all pairs.
    pub p_holm: f64,
    pub reject: bool,
    /// Hodges-Lehmann pseudomedian of the paired differences, signed so
    /// that a negative value means the column classifier is better.
    pub pseudomedian: f64,
    pub exact: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub direction: Direction,
    pub n_datasets: usize,
    pub classifiers: Vec<String>,
    pub mean_ranks: Vec<f64>,
    pub omnibus: Omnibus,
    /// Set when the omnibus null was retained: the pairwise table is still
    /// reported but should not be read as evidence of differences.
    pub pairwise_flagged: bool,
    /// Pairwise p-values are two-sided.
    pub two_sided: bool,
    /// One row per pair `(i, j)`, `i < j`, in row-major order.
    pub pairwise: Vec<PairwiseRow>,
    /// `k × k`; entry `(i, j)` is the pseudomedian for row `i` against
    /// column `j` under the same sign convention, zero on the diagonal.
    pub pseudomedians: Vec<Vec<f64>>,
    pub nodes: Vec<GraphNode>,
    /// Undirected edges between classifiers the pairwise tests could not
    /// distinguish after Holm's correction, as `[row, column]` with the row
    /// listed first.
    pub edges: Vec<[String; 2]>,
}

impl ComparisonReport {
    /// Entry of the pairwise table for classifiers `a` and `b` in either
    /// order.
    pub fn pair(&self, a: &str, b: &str) -> Option<&PairwiseRow> {
        self.pairwise
            .iter()
            .find(|r| (r.row == a && r.column == b) || (r.row == b && r.column == a))
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.iter().any(|[x, y]| (x == a && y == b) || (x == b && y == a))
    }
}

/// Friedman/Iman-Davenport omnibus test followed by pairwise Wilcoxon
/// signed-rank tests with Holm's correction at level `alpha`.
pub fn compare(matrix: &ScoreMatrix, alpha: f64) -> Result<ComparisonReport, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    let k = matrix.classifiers().len();
    let n = matrix.datasets().len();
    let ranks = matrix.ranks();
    let mean_ranks: Vec<f64> = ranks.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let chi2 = friedman(&ranks);
    let omnibus = match iman_davenport(chi2, n, k) {
        Ok((f, p)) => Omnibus { chi2, f: Some(f), p, saturated: false, rejected: p <= alpha },
        Err(StatsError::Saturated { .. }) => Omnibus { chi2, f: None, p: 0.0, saturated: true, rejected: true },
        Err(e) => return Err(e),
    };

    let sign = match matrix.direction() {
        Direction::HigherBetter => 1.0,
        Direction::LowerBetter => -1.0,
    };
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let tests = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d: Vec<f64> = matrix.row(i).iter().zip(matrix.row(j)).map(|(a, b)| sign * (a - b)).collect();
            Ok((wilcoxon_signed_rank(&d)?, hodges_lehmann(&d)?))
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    let p_values: Vec<f64> = tests.iter().map(|(w, _)| w.p).collect();
    let adjusted = holm_adjusted(&p_values);
    let decisions = holm(&p_values, alpha);

    let ids = matrix.classifiers();
    let mut pseudomedians = vec![vec![0.0; k]; k];
    let mut pairwise = Vec::with_capacity(pairs.len());
    let mut edges = Vec::new();
    for (((&(i, j), (w, hl)), &p_holm), &reject) in pairs.iter().zip(&tests).zip(&adjusted).zip(&decisions) {
        pseudomedians[i][j] = *hl;
        pseudomedians[j][i] = -hl;
        if !reject {
            edges.push([ids[i].clone(), ids[j].clone()]);
        }
        pairwise.push(PairwiseRow {
            row: ids[i].clone(),
            column: ids[j].clone(),
            t: w.t,
            r_plus: w.r_plus,
            r_minus: w.r_minus,
            p: w.p,
            p_holm,
            reject,
            pseudomedian: *hl,
            exact: w.exact,
            degenerate: w.degenerate,
        });
    }
    let nodes = ids
        .iter()
        .zip(&mean_ranks)
        .map(|(id, &mean_rank)| GraphNode { id: id.clone(), mean_rank })
        .collect();
    Ok(ComparisonReport {
        alpha,
        direction: matrix.direction(),
        n_datasets: n,
        classifiers: ids.to_vec(),
        mean_ranks,
        pairwise_flagged: !omnibus.rejected,
        omnibus,
        two_sided: true,
        pairwise,
        pseudomedians,
        nodes,
        edges,
    })
}
