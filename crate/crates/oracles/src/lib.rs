//! Slow, independent reference computations used to freeze expected values
//! in the test suites. Nothing here shares code with `lamkit-core`; every
//! routine is written from its textbook definition.

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn clipped_line(z: f64, alpha: f64) -> f64 {
    (0.5 + z / (2.0 * alpha)).clamp(0.0, 1.0)
}

/// Squared error between the clipped line of half-width `alpha` and the
/// logistic sigmoid, integrated numerically over [-40, 40]. The integrand
/// is split at the two kinks so each panel is smooth.
pub fn squared_error_quadrature(alpha: f64) -> f64 {
    let f = |z: f64| {
        let e = clipped_line(z, alpha) - logistic(z);
        e * e
    };
    let lo = -40.0;
    let hi = 40.0;
    let mut knots = vec![lo];
    if alpha < hi {
        knots.push(-alpha);
        knots.push(0.0);
        knots.push(alpha);
    } else {
        knots.push(0.0);
    }
    knots.push(hi);
    knots
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], 1e-14))
        .sum()
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Truncated power series `sum z^k / k^2` with `terms` terms.
pub fn dilog_power_series(z: f64, terms: usize) -> f64 {
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 1..=terms {
        pow *= z;
        sum += pow / (k * k) as f64;
    }
    sum
}

/// Dilogarithm on [-1, 1] from the power series, using Euler's reflection
/// for arguments above 1/2 and the duplication formula
/// `Li2(z) = Li2(z^2)/2 - Li2(-z)` for arguments below -1/2.
pub fn dilog_series_oracle(z: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&z), "oracle covers [-1, 1] only");
    if z == 1.0 {
        PI * PI / 6.0
    } else if z > 0.5 {
        PI * PI / 6.0 - z.ln() * (1.0 - z).ln() - dilog_power_series(1.0 - z, 400)
    } else if z >= -0.5 {
        dilog_power_series(z, 400)
    } else {
        0.5 * dilog_series_oracle(z * z) - dilog_series_oracle(-z)
    }
}

/// Dilogarithm by quadrature of its defining integral `-int_0^z ln(1-u)/u du`.
pub fn dilog_quadrature(z: f64) -> f64 {
    let f = |u: f64| {
        if u == 0.0 {
            -1.0
        } else {
            (1.0 - u).ln() / u
        }
    };
    if z == 0.0 {
        return 0.0;
    }
    if z >= -1.0 {
        return -adaptive_simpson(&f, 0.0, z, 1e-15);
    }
    // below -1 substitute u = -e^s, which turns the tail into
    // int_0^ln|z| ln(1 + e^s) ds
    let head = -adaptive_simpson(&f, 0.0, -1.0, 1e-15);
    let g = |s: f64| s.exp().ln_1p();
    head - adaptive_simpson(&g, 0.0, (-z).ln(), 1e-13)
}

/// Two-sided exact signed-rank p-value by enumerating every sign pattern.
///
/// `nonzero_ranks` are the ranks attached to nonzero differences and
/// `observed_plus` the observed positive rank sum restricted to them. The
/// statistic is the distance of the positive rank sum from its null mean.
pub fn signed_rank_enumeration(nonzero_ranks: &[f64], observed_plus: f64) -> f64 {
    let n = nonzero_ranks.len();
    assert!(n <= 24, "enumeration limited to 2^24 patterns");
    let total: f64 = nonzero_ranks.iter().sum();
    let centre = total / 2.0;
    let observed = (observed_plus - centre).abs();
    let mut hits = 0u64;
    for mask in 0u64..(1u64 << n) {
        let mut plus = 0.0;
        for (i, r) in nonzero_ranks.iter().enumerate() {
            if mask >> i & 1 == 1 {
                plus += r;
            }
        }
        if (plus - centre).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / (1u64 << n) as f64
}

/// Median of all Walsh averages `(d_i + d_j)/2`, `i <= j`.
pub fn walsh_median(d: &[f64]) -> f64 {
    let mut w = Vec::new();
    for i in 0..d.len() {
        for j in i..d.len() {
            w.push((d[i] + d[j]) / 2.0);
        }
    }
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = w.len();
    if n % 2 == 1 {
        w[n / 2]
    } else {
        (w[n / 2 - 1] + w[n / 2]) / 2.0
    }
}

/// Friedman statistic from the rank-sum form
/// `12/(N k (k+1)) * sum_i S_i^2 - 3 N (k+1)`, where `S_i` is the rank sum
/// of algorithm `i`. `ranks[i][j]` is algorithm `i` on dataset `j`.
pub fn friedman_rank_sums(ranks: &[Vec<f64>]) -> f64 {
    let k = ranks.len() as f64;
    let n = ranks[0].len() as f64;
    let mut acc = 0.0;
    for row in ranks {
        let s: f64 = row.iter().sum();
        acc += s * s;
    }
    12.0 / (n * k * (k + 1.0)) * acc - 3.0 * n * (k + 1.0)
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Trinomial probability of `N_A - N_B = nd` under `p_A = p_B = (1 - p0)/2`
/// by enumerating every `(n_a, n_b, n_0)` triple.
pub fn trinomial_pmf_enumeration(n: u64, nd: i64, p0: f64) -> f64 {
    let half = (1.0 - p0) / 2.0;
    let mut total = 0.0;
    for na in 0..=n {
        for nb in 0..=(n - na) {
            if na as i64 - nb as i64 != nd {
                continue;
            }
            let n0 = n - na - nb;
            let ln_coef = ln_factorial(n) - ln_factorial(na) - ln_factorial(nb) - ln_factorial(n0);
            let mut p = ln_coef.exp();
            p *= half.powi((na + nb) as i32);
            p *= p0.powi(n0 as i32);
            total += p;
        }
    }
    total
}

/// Mean logistic loss plus ridge penalty on the slopes, written directly
/// from its definition. `rows[j]` excludes the intercept.
pub fn nnlr_objective(rows: &[Vec<f64>], labels: &[u8], c: f64, bias: f64, slopes: &[f64]) -> f64 {
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let z: f64 = bias + x.iter().zip(slopes).map(|(a, b)| a * b).sum::<f64>();
        let p = logistic(z);
        loss += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
    }
    loss / rows.len() as f64 + c * slopes.iter().map(|b| b * b).sum::<f64>()
}

/// Minimise a convex function of three variables by nested golden-section
/// search over a box. Convexity makes every partial minimum unimodal.
pub fn nested_golden_3<F: Fn(f64, f64, f64) -> f64>(f: F, bounds: [(f64, f64); 3], tol: f64) -> ([f64; 3], f64) {
    let inner = |a: f64, b: f64| {
        let c = golden_section(|c| f(a, b, c), bounds[2].0, bounds[2].1, tol);
        (c, f(a, b, c))
    };
    let middle = |a: f64| {
        let b = golden_section(|b| inner(a, b).1, bounds[1].0, bounds[1].1, tol);
        (b, inner(a, b).1)
    };
    let a = golden_section(|a| middle(a).1, bounds[0].0, bounds[0].1, tol);
    let (b, _) = middle(a);
    let (c, v) = inner(a, b);
    ([a, b, c], v)
}

fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Count-weighted entropy of the partition of `sorted` (value, label) pairs
/// induced by cut positions (indices into the sorted sequence).
pub fn partition_entropy(sorted: &[(f64, u8)], cuts: &[usize]) -> f64 {
    let mut bounds = vec![0];
    bounds.extend_from_slice(cuts);
    bounds.push(sorted.len());
    bounds
        .windows(2)
        .map(|w| {
            let seg = &sorted[w[0]..w[1]];
            let pos = seg.iter().filter(|p| p.1 == 1).count();
            seg.len() as f64 * entropy(pos, seg.len())
        })
        .sum()
}

/// Globally optimal pair of split thresholds (three leaves) by exhaustive
/// enumeration over all cut positions between distinct values, with every
/// leaf holding at least `min_leaf` points. Returns midpoint thresholds.
pub fn best_two_thresholds(values: &[f64], labels: &[u8], min_leaf: usize) -> Option<(f64, f64)> {
    let mut sorted: Vec<(f64, u8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = sorted.len();
    let cut_ok = |i: usize| i > 0 && i < n && sorted[i - 1].0 < sorted[i].0;
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 1..n {
        if !cut_ok(i) || i < min_leaf {
            continue;
        }
        for j in (i + 1)..n {
            if !cut_ok(j) || j - i < min_leaf || n - j < min_leaf {
                continue;
            }
            let e = partition_entropy(&sorted, &[i, j]);
            if best.is_none_or(|(b, _, _)| e < b - 1e-12) {
                best = Some((e, i, j));
            }
        }
    }
    best.map(|(_, i, j)| {
        (
            0.5 * (sorted[i - 1].0 + sorted[i].0),
            0.5 * (sorted[j - 1].0 + sorted[j].0),
        )
    })
}

/// Two-step greedy tree by brute force: the best single cut over the whole
/// sample, then the best single cut inside either child. Returns the sorted
/// thresholds chosen.
pub fn greedy_two_splits(values: &[f64], labels: &[u8], min_leaf: usize) -> Vec<f64> {
    let mut sorted: Vec<(f64, u8)> = values.iter().copied().zip(labels.iter().copied()).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let n = sorted.len();
    let base = partition_entropy(&sorted, &[]);
    let mut first: Option<(f64, usize)> = None;
    for i in min_leaf.max(1)..=(n - min_leaf.max(1)) {
        if i == 0 || i >= n || sorted[i - 1].0 == sorted[i].0 {
            continue;
        }
        let gain = base - partition_entropy(&sorted, &[i]);
        if gain > 1e-12 && first.is_none_or(|(g, _)| gain > g + 1e-12) {
            first = Some((gain, i));
        }
    }
    let Some((_, i)) = first else {
        return vec![];
    };
    let mut second: Option<(f64, usize)> = None;
    for j in 1..n {
        if j == i || sorted[j - 1].0 == sorted[j].0 {
            continue;
        }
        let (lo, hi) = if j < i { (0, i) } else { (i, n) };
        if j - lo < min_leaf || hi - j < min_leaf {
            continue;
        }
        let seg = &sorted[lo..hi];
        let gain = partition_entropy(seg, &[]) - partition_entropy(seg, &[j - lo]);
        if gain > 1e-12 && second.is_none_or(|(g, _)| gain > g + 1e-12) {
            second = Some((gain, j));
        }
    }
    let mid = |k: usize| 0.5 * (sorted[k - 1].0 + sorted[k].0);
    let mut out = vec![mid(i)];
    if let Some((_, j)) = second {
        out.push(mid(j));
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// AUC by enumerating every positive/negative pair.
pub fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}
