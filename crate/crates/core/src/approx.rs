//! The logistic sigmoid and its optimal three-piece linear approximation.
//!
//! The approximation family is the clipped line
//! `z -> clip(1/2 + z / (2 alpha))`, zero left of `-alpha` and one right of
//! `alpha`. Its squared error against the sigmoid over the whole real line
//! has a closed form in terms of the dilogarithm, and is minimised at the
//! half-width [`ALPHA_STAR`].

use std::f64::consts::PI;

use thiserror::Error;

/// Half-width of the squared-error optimal clipped line, fixed to the
/// rational `80000 / 30773` so that every build uses the same value.
///
/// [`find_alpha_star`] recomputes the minimiser numerically; the two agree
/// to about 4e-7.
pub const ALPHA_STAR: f64 = 80000.0 / 30773.0;

const PI2_6: f64 = PI * PI / 6.0;

/// Largest double strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApproxError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("dilogarithm argument {0} is off the real branch (must be <= 1)")]
    OffRealBranch(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("minimiser search did not converge in {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
}

/// Logistic sigmoid `1 / (1 + e^-z)`, evaluated without overflow for
/// large `|z|`. NaN propagates.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Projection of the real line onto `[0, 1]`.
pub fn clip_unit(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

/// The clipped line of half-width `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiecewiseLinearSigmoid {
    alpha: f64,
}

impl PiecewiseLinearSigmoid {
    pub fn new(alpha: f64) -> Result<Self, ApproxError> {
        if alpha.is_finite() && alpha > 0.0 {
            Ok(Self { alpha })
        } else {
            Err(ApproxError::InvalidAlpha(alpha))
        }
    }

    /// The squared-error optimal member, `alpha = ALPHA_STAR`.
    pub const fn optimal() -> Self {
        Self { alpha: ALPHA_STAR }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Evaluates `clip(1/2 + z / (2 alpha))`.
    ///
    /// The value is built from `|z|` and reflected, so `eval(-z) == 1 - eval(z)`
    /// holds bit-for-bit, and it is exactly 0 or 1 if and only if `|z| >= alpha`.
    pub fn eval(&self, z: f64) -> f64 {
        let upper = self.upper_half(z.abs());
        if z < 0.0 {
            1.0 - upper
        } else {
            upper
        }
    }

    /// Value on `r >= 0`, in `[1/2, 1]`.
    fn upper_half(&self, r: f64) -> f64 {
        if r >= self.alpha {
            return 1.0;
        }
        let v = 0.5 + r / (2.0 * self.alpha);
        // rounding can land on 1.0 within an ulp of the kink
        if v >= 1.0 {
            BELOW_ONE
        } else {
            v
        }
    }
}

/// Clipped line of half-width `alpha` evaluated at `z`.
pub fn pl_sigmoid(z: f64, alpha: f64) -> Result<f64, ApproxError> {
    Ok(PiecewiseLinearSigmoid::new(alpha)?.eval(z))
}

/// Real dilogarithm `Li2(z) = -int_0^z ln(1-u)/u du` for `z <= 1`.
///
/// Uses the power series on `|z| <= 1/2`, the Landen identity on `[-1, -1/2)`,
/// inversion below `-1` and Euler's reflection on `(1/2, 1]`.
pub fn dilog(z: f64) -> Result<f64, ApproxError> {
    if z.is_nan() || z > 1.0 {
        return Err(ApproxError::OffRealBranch(z));
    }
    Ok(dilog_real(z))
}

fn dilog_real(z: f64) -> f64 {
    if z == 1.0 {
        PI2_6
    } else if z > 0.5 {
        PI2_6 - z.ln() * (1.0 - z).ln() - dilog_series(1.0 - z)
    } else if z >= -0.5 {
        dilog_series(z)
    } else if z >= -1.0 {
        let l = (1.0 - z).ln();
        -dilog_series(z / (z - 1.0)) - 0.5 * l * l
    } else if z == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        let l = (-z).ln();
        -PI2_6 - 0.5 * l * l - dilog_real(1.0 / z)
    }
}

/// `sum_{k>=1} z^k / k^2` for `|z| <= 1/2`.
fn dilog_series(z: f64) -> f64 {
    let mut pow = z;
    let mut sum = z;
    for k in 2..=200u32 {
        pow *= z;
        let term = pow / f64::from(k * k);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `Li2(-e^t)` for `t >= 0` via inversion, without forming `e^t`.
fn dilog_neg_exp(t: f64) -> f64 {
    -PI2_6 - 0.5 * t * t - dilog_real(-(-t).exp())
}

/// Squared error `int (clip-line(z; alpha) - sigmoid(z))^2 dz` over the real
/// line, in closed form.
pub fn squared_error(alpha: f64) -> Result<f64, ApproxError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(ApproxError::InvalidAlpha(alpha));
    }
    Ok(squared_error_unchecked(alpha))
}

fn squared_error_unchecked(a: f64) -> f64 {
    // log(1 + e^-a) and log(e^a + 1) = a + log(1 + e^-a)
    let l_neg = (-a).exp().ln_1p();
    let l_pos = a + l_neg;
    let li_neg = dilog_real(-(-a).exp());
    let li_pos = dilog_neg_exp(a);
    -(7.0 * a * a + 6.0 * a * l_neg - 6.0 * a * l_pos + 3.0 * a - 3.0 * li_neg + 3.0 * li_pos)
        / (3.0 * a)
}

/// How [`find_alpha_star`] reached its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Newton,
    GoldenSection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSearch {
    pub alpha: f64,
    pub squared_error: f64,
    pub iterations: usize,
    pub method: SearchMethod,
}

const NEWTON_START: f64 = 2.0;
const NEWTON_MAX_ITER: usize = 100;
const FD_STEP: f64 = 1e-6;
const FD_STEP_CURVATURE: f64 = 1e-4;
const BRACKET: (f64, f64) = (0.1, 20.0);

fn se_slope(a: f64) -> f64 {
    (squared_error_unchecked(a + FD_STEP) - squared_error_unchecked(a - FD_STEP)) / (2.0 * FD_STEP)
}

/// Numerically locates the minimiser of [`squared_error`].
///
/// Newton's method on the central-difference slope, starting from 2. If a
/// step leaves `[0.1, 20]` the search switches to golden-section on that
/// bracket. `tolerance` bounds the final step length.
pub fn find_alpha_star(tolerance: f64) -> Result<AlphaSearch, ApproxError> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(ApproxError::InvalidTolerance(tolerance));
    }
    let mut a = NEWTON_START;
    for it in 1..=NEWTON_MAX_ITER {
        let g = se_slope(a);
        let h = (se_slope(a + FD_STEP_CURVATURE) - se_slope(a - FD_STEP_CURVATURE))
            / (2.0 * FD_STEP_CURVATURE);
        let next = if h > 0.0 { a - g / h } else { f64::NAN };
        if !(next >= BRACKET.0 && next <= BRACKET.1) {
            return golden_fallback(tolerance, it);
        }
        let step = next - a;
        a = next;
        if step.abs() <= tolerance {
            return Ok(AlphaSearch {
                alpha: a,
                squared_error: squared_error_unchecked(a),
                iterations: it,
                method: SearchMethod::Newton,
            });
        }
    }
    Err(ApproxError::NoConvergence { iterations: NEWTON_MAX_ITER, estimate: a })
}

fn golden_fallback(tolerance: f64, spent: usize) -> Result<AlphaSearch, ApproxError> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = BRACKET;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = squared_error_unchecked(x1);
    let mut f2 = squared_error_unchecked(x2);
    let mut it = spent;
    while hi - lo > tolerance {
        it += 1;
        if it > spent + 500 {
            return Err(ApproxError::NoConvergence { iterations: it, estimate: 0.5 * (lo + hi) });
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = squared_error_unchecked(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = squared_error_unchecked(x2);
        }
    }
    let alpha = 0.5 * (lo + hi);
    Ok(AlphaSearch {
        alpha,
        squared_error: squared_error_unchecked(alpha),
        iterations: it,
        method: SearchMethod::GoldenSection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lamkit_oracles as oracle;
    use proptest::prelude::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let alice = sigmoid((0.1f64 / 0.9).ln() + 1.61);
        let bob = sigmoid((0.25f64 / 0.75).ln() + 1.61);
        assert!((alice - 0.357).abs() < 1e-3, "{alice}");
        assert!((bob - 0.625).abs() < 1e-3, "{bob}");
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn clip_values() {
        assert_eq!(clip_unit(0.3), 0.3);
        assert_eq!(clip_unit(-2.0), 0.0);
        assert_eq!(clip_unit(1.7), 1.0);
    }

    #[test]
    fn pl_sigmoid_values() {
        assert_eq!(pl_sigmoid(0.0, ALPHA_STAR).unwrap(), 0.5);
        assert_eq!(pl_sigmoid(ALPHA_STAR, ALPHA_STAR).unwrap(), 1.0);
        assert_eq!(pl_sigmoid(-ALPHA_STAR, ALPHA_STAR).unwrap(), 0.0);
        // 1/2 - 2.19722/(2 * 2.59968) = 0.0774048...
        let v = pl_sigmoid((0.1f64 / 0.9).ln(), 2.59968).unwrap();
        assert!((v - 0.077_404_800_3).abs() < 1e-10, "{v}");
        assert!(matches!(pl_sigmoid(0.0, 0.0), Err(ApproxError::InvalidAlpha(_))));
        assert!(matches!(pl_sigmoid(0.0, -1.0), Err(ApproxError::InvalidAlpha(_))));
    }

    #[test]
    fn saturation_at_ulp_boundary() {
        let s = PiecewiseLinearSigmoid::optimal();
        let below = ALPHA_STAR.next_down();
        assert!(s.eval(below) < 1.0);
        assert!(s.eval(-below) > 0.0);
        assert_eq!(s.eval(ALPHA_STAR.next_up()), 1.0);
        let small = PiecewiseLinearSigmoid::new(3.0).unwrap();
        for z in [2.9999999999999996, 2.999999999999999] {
            let v = small.eval(z);
            assert!(v < 1.0 && v > 0.5);
        }
    }

    #[test]
    fn dilog_special_points() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert!((dilog(-1.0).unwrap() + PI * PI / 12.0).abs() < 1e-15);
        assert!((dilog(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-15);
        let half = PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2);
        assert!((dilog(0.5).unwrap() - half).abs() < 1e-15);
        assert!(matches!(dilog(1.5), Err(ApproxError::OffRealBranch(_))));
        assert!(dilog(f64::NAN).is_err());
    }

    #[test]
    fn dilog_matches_series_oracle() {
        let expected = oracle::dilog_series_oracle(-0.5);
        assert!((dilog(-0.5).unwrap() - expected).abs() < 1e-14);
        for i in 0..=60 {
            let z = -1.0 + 1.5 * f64::from(i) / 60.0;
            let got = dilog(z).unwrap();
            assert!((got - oracle::dilog_series_oracle(z)).abs() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn dilog_far_negative_matches_quadrature() {
        for alpha in [0.5, 1.0, 3.0, 10.0] {
            let z = -f64::exp(alpha);
            let want = oracle::dilog_quadrature(z);
            let got = dilog(z).unwrap();
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "z={z} {got} {want}");
        }
        // inversion path directly against the defining identity at large argument
        let t = 50.0f64;
        let got = dilog(-t.exp()).unwrap();
        let want = -PI2_6 - 0.5 * t * t - dilog(-(-t).exp()).unwrap();
        assert!((got - want).abs() < 1e-12 * want.abs());
    }

    #[test]
    fn squared_error_matches_quadrature() {
        for alpha in [0.5, 1.0, 2.0, 2.59968, ALPHA_STAR, 5.0, 10.0] {
            let want = oracle::squared_error_quadrature(alpha);
            let got = squared_error(alpha).unwrap();
            assert!((got - want).abs() < 1e-8, "alpha={alpha} {got} {want}");
        }
        assert!(squared_error(5.0).unwrap() > squared_error(2.59968).unwrap());
        assert!(squared_error(0.0).is_err());
        // large half-width stays finite (no e^alpha overflow)
        assert!(squared_error(800.0).unwrap().is_finite());
    }

    #[test]
    fn alpha_star_search() {
        let found = find_alpha_star(1e-6).unwrap();
        assert_eq!(found.method, SearchMethod::Newton);
        assert!((found.alpha - 2.5996).abs() < 5e-4);
        let golden = oracle::golden_section(|a| squared_error(a).unwrap(), 0.5, 10.0, 1e-9);
        assert!((found.alpha - golden).abs() < 1e-5, "{} vs {golden}", found.alpha);
        let se = found.squared_error;
        assert!(se <= squared_error(found.alpha + 1e-3).unwrap());
        assert!(se <= squared_error(found.alpha - 1e-3).unwrap());
        assert!((found.alpha - ALPHA_STAR).abs() < 1e-6);
        assert!(find_alpha_star(0.0).is_err());
    }

    #[test]
    fn minimality_over_grid() {
        let best = squared_error(ALPHA_STAR).unwrap();
        for i in 0..200 {
            let a = 0.2 + 9.8 * f64::from(i) / 199.0;
            assert!(squared_error(a).unwrap() >= best - 1e-12, "alpha={a}");
        }
    }

    proptest! {
        #[test]
        fn antisymmetric(z in -1e3f64..1e3, alpha in 1e-3f64..50.0) {
            let s = PiecewiseLinearSigmoid::new(alpha).unwrap();
            prop_assert_eq!(s.eval(-z), 1.0 - s.eval(z));
        }

        #[test]
        fn monotone(a in -20f64..20.0, b in -20f64..20.0, alpha in 1e-3f64..20.0) {
            let s = PiecewiseLinearSigmoid::new(alpha).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(s.eval(lo) <= s.eval(hi));
        }

        #[test]
        fn saturates_exactly_outside_band(z in -20f64..20.0, alpha in 1e-3f64..20.0) {
            let v = PiecewiseLinearSigmoid::new(alpha).unwrap().eval(z);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 0.0 || v == 1.0, z.abs() >= alpha);
        }
    }
}
