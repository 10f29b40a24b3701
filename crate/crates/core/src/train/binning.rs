use super::TrainError;

/// Gains at or below this are treated as no improvement, and candidates
/// within it of the incumbent count as ties.
const GAIN_EPS: f64 = 1e-12;

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    /// first index of the right child in sorted order
    cut: usize,
}

/// Best cut of `sorted[lo..hi]`, or `None` when no admissible cut gains.
fn best_cut(values: &[f64], cum_pos: &[usize], lo: usize, hi: usize, min_leaf: usize) -> Option<Candidate> {
    let n = hi - lo;
    if n < 2 * min_leaf {
        return None;
    }
    let pos = |a: usize, b: usize| cum_pos[b] - cum_pos[a];
    let parent = n as f64 * entropy(pos(lo, hi), n);
    let mut best: Option<Candidate> = None;
    for cut in (lo + min_leaf)..=(hi - min_leaf) {
        if values[cut - 1] == values[cut] {
            continue;
        }
        let (nl, nr) = (cut - lo, hi - cut);
        let child = nl as f64 * entropy(pos(lo, cut), nl) + nr as f64 * entropy(pos(cut, hi), nr);
        let gain = parent - child;
        if gain > GAIN_EPS && best.is_none_or(|b| gain > b.gain + GAIN_EPS) {
            best = Some(Candidate { gain, cut });
        }
    }
    best
}

/// Split thresholds of a single-feature classification tree with at most
/// `max_leaves` leaves.
///
/// Leaves are grown best-first: at each step the leaf whose best cut has the
/// largest count-weighted entropy reduction is split, until the leaf budget
/// is spent or no cut improves. Every leaf keeps at least `min_leaf`
/// samples (`min_leaf` of 0 is treated as 1). Equal gains go to the smaller
/// threshold. Thresholds are midpoints between adjacent distinct values and
/// are returned ascending. NaN values are ignored.
pub fn bin_feature(values: &[f64], labels: &[u8], max_leaves: usize, min_leaf: usize) -> Result<Vec<f64>, TrainError> {
    if max_leaves < 2 {
        return Err(TrainError::InvalidParameter(format!("max_leaves must be at least 2, got {max_leaves}")));
    }
    if values.len() != labels.len() {
        return Err(TrainError::Shape(format!("{} values but {} labels", values.len(), labels.len())));
    }
    let min_leaf = min_leaf.max(1);
    let mut pairs: Vec<(f64, u8)> = values
        .iter()
        .zip(labels)
        .filter(|(v, _)| !v.is_nan())
        .map(|(&v, &y)| (v, y))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut cum_pos = Vec::with_capacity(pairs.len() + 1);
    cum_pos.push(0usize);
    for p in &pairs {
        cum_pos.push(cum_pos.last().unwrap() + usize::from(p.1 == 1));
    }

    // leaves as (lo, hi, best cut), kept in ascending order
    let mut leaves: Vec<(usize, usize, Option<Candidate>)> =
        vec![(0, sorted.len(), best_cut(&sorted, &cum_pos, 0, sorted.len(), min_leaf))];
    while leaves.len() < max_leaves {
        let mut chosen: Option<(usize, Candidate)> = None;
        for (i, leaf) in leaves.iter().enumerate() {
            if let Some(c) = leaf.2 {
                if chosen.is_none_or(|(_, b)| c.gain > b.gain + GAIN_EPS) {
                    chosen = Some((i, c));
                }
            }
        }
        let Some((i, c)) = chosen else { break };
        let (lo, hi, _) = leaves[i];
        let left = (lo, c.cut, best_cut(&sorted, &cum_pos, lo, c.cut, min_leaf));
        let right = (c.cut, hi, best_cut(&sorted, &cum_pos, c.cut, hi, min_leaf));
        leaves.splice(i..=i, [left, right]);
    }
    Ok(leaves[1..].iter().map(|&(lo, _, _)| 0.5 * (sorted[lo - 1] + sorted[lo])).collect())
}
