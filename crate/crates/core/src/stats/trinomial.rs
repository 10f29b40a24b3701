use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::special::ln_gamma;

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `P(N_A - N_B = nd)` for `n` trials with tie probability `p0` and
/// `p_A = p_B = (1 - p0)/2`.
pub fn trinomial_pmf(n: u64, nd: i64, p0: f64) -> f64 {
    let m = nd.unsigned_abs();
    if m > n || !(0.0..=1.0).contains(&p0) {
        return 0.0;
    }
    let ln_half = ((1.0 - p0) / 2.0).ln();
    let ln_p0 = p0.ln();
    let mut total = 0.0;
    let mut nb = 0u64;
    while nb + m + nb <= n {
        let na = nb + m;
        let n0 = n - na - nb;
        let decided = na + nb;
        // 0 * ln(0) terms vanish; a zero base with positive exponent kills the term
        let tie_part = if n0 == 0 { 0.0 } else { n0 as f64 * ln_p0 };
        let win_part = if decided == 0 { 0.0 } else { decided as f64 * ln_half };
        let ln_term = ln_factorial(n) - ln_factorial(na) - ln_factorial(nb) - ln_factorial(n0) + tie_part + win_part;
        total += ln_term.exp();
        nb += 1;
    }
    total
}

fn upper_tail(n: u64, nd: i64, p0: f64) -> f64 {
    let from = nd.max(-(n as i64));
    (from..=n as i64).map(|k| trinomial_pmf(n, k, p0)).sum::<f64>().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrinomialResult {
    pub n: u64,
    pub n_d: i64,
    /// Estimated tie probability `n_0 / n`.
    pub p0: f64,
    /// `P(N_d >= n_d)`, for the alternative that A is preferred.
    pub p_one_sided: f64,
    /// `min(1, 2 p_one_sided)`.
    pub p_two_sided: f64,
}

/// Trinomial test of `p_A = p_B` from `n_a` preferences for A, `n_b` for B
/// and `n_0` ties, with the tie probability estimated by `n_0 / n`.
pub fn trinomial_test(n_a: u64, n_b: u64, n_0: u64) -> Result<TrinomialResult, StatsError> {
    let n = n_a + n_b + n_0;
    if n == 0 {
        return Err(StatsError::NoObservations);
    }
    let p0 = n_0 as f64 / n as f64;
    let n_d = n_a as i64 - n_b as i64;
    let p = upper_tail(n, n_d, p0);
    Ok(TrinomialResult { n, n_d, p0, p_one_sided: p, p_two_sided: (2.0 * p).min(1.0) })
}

/// Smallest `c >= 0` with `P(N_d >= c) <= alpha` for `n` trials and tie
/// probability `p0`; `None` if no such `c` exists.
pub fn trinomial_critical_value(n: u64, p0: f64, alpha: f64) -> Result<Option<i64>, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if n == 0 {
        return Err(StatsError::NoObservations);
    }
    let mut tail = upper_tail(n, 0, p0);
    for c in 0..=n as i64 {
        if tail <= alpha {
            return Ok(Some(c));
        }
        tail -= trinomial_pmf(n, c, p0);
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lamkit_oracles::trinomial_pmf_enumeration;
    use proptest::prelude::*;

    #[test]
    fn survey_counts() {
        let r = trinomial_test(13, 1, 22).unwrap();
        assert_eq!(r.n_d, 12);
        assert_eq!(r.n, 36);
        assert!((r.p_one_sided - 0.000990658924).abs() < 1e-11, "{}", r.p_one_sided);
        assert!((r.p_one_sided - 0.0009).abs() <= 2e-4);
    }

    #[test]
    fn all_ties() {
        let r = trinomial_test(0, 0, 9).unwrap();
        assert_eq!((r.n_d, r.p_one_sided, r.p0), (0, 1.0, 1.0));
        assert!(trinomial_test(0, 0, 0).is_err());
    }

    #[test]
    fn no_ties_reduces_to_sign_test() {
        // P(N_A - N_B >= 4) with 6 trials: N_A >= 5, (6 + 1) / 64
        let r = trinomial_test(5, 1, 0).unwrap();
        assert!((r.p_one_sided - 7.0 / 64.0).abs() < 1e-14);
        assert!((r.p_two_sided - 14.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn pmf_matches_enumeration_and_normalises() {
        for n in [1u64, 2, 7, 20, 36, 60] {
            for &p0 in &[0.0, 0.1, 22.0 / 36.0, 0.9, 1.0] {
                let mut total = 0.0;
                for nd in -(n as i64)..=n as i64 {
                    let p = trinomial_pmf(n, nd, p0);
                    let o = trinomial_pmf_enumeration(n, nd, p0);
                    assert!((p - o).abs() < 1e-12, "n={n} nd={nd} p0={p0}: {p} vs {o}");
                    assert!(p >= 0.0);
                    assert_eq!(p, trinomial_pmf(n, -nd, p0));
                    total += p;
                }
                assert!((total - 1.0).abs() <= 1e-10, "n={n} p0={p0}: {total}");
            }
        }
    }

    #[test]
    fn critical_values() {
        let c = trinomial_critical_value(36, 22.0 / 36.0, 0.05).unwrap().unwrap();
        assert!(upper_tail(36, c, 22.0 / 36.0) <= 0.05);
        assert!(upper_tail(36, c - 1, 22.0 / 36.0) > 0.05);
        assert_eq!(trinomial_critical_value(3, 1.0, 0.05).unwrap(), Some(1));
        // sign test with 6 trials: P(N_d >= 6) = 1/64, P(N_d >= 4) = 7/64
        assert_eq!(trinomial_critical_value(6, 0.0, 0.05).unwrap(), Some(5));
    }

    proptest! {
        #[test]
        fn p_value_nonincreasing_in_nd(n in 1u64..50, ties in 0.0f64..1.0) {
            let p0 = (ties * n as f64).floor() / n as f64;
            let mut prev = f64::INFINITY;
            for nd in -(n as i64)..=n as i64 {
                let p = upper_tail(n, nd, p0);
                prop_assert!(p <= prev + 1e-12);
                prev = p;
            }
        }
    }
}
