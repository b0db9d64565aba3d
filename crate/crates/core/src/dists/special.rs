//! Standard normal density, distribution and quantile functions.
//!
//! Everything is evaluated in log space where tails matter. The
//! complementary error function follows Cody's rational Chebyshev
//! approximations; the scaled form `erfcx` is used directly so that
//! `log Phi(x)` stays finite far below the point where `Phi(x)` underflows.

#![allow(clippy::excessive_precision)]

use crate::scalar::Real;

const ERF_A: [f64; 5] = [
    3.16112374387056560e00,
    1.13864154151050156e02,
    3.77485237685302021e02,
    3.20937758913846947e03,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e01,
    2.44024637934444173e02,
    1.28261652607737228e03,
    2.84423683343917062e03,
];
const ERFC_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e00,
    6.61191906371416295e01,
    2.98635138197400131e02,
    8.81952221241769090e02,
    1.71204761263407058e03,
    2.05107837782607147e03,
    1.23033935479799725e03,
    2.15311535474403846e-8,
];
const ERFC_D: [f64; 8] = [
    1.57449261107098347e01,
    1.17693950891312499e02,
    5.37181101862009858e02,
    1.62138957456669019e03,
    3.29079923573345963e03,
    4.36261909014324716e03,
    3.43936767414372164e03,
    1.23033935480374942e03,
];
const ERFC_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERFC_Q: [f64; 5] = [
    2.56852019228982242e00,
    1.87295284992346725e00,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

const ERF_SMALL: f64 = 0.46875;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// sqrt(2 / pi)
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// `erf(x)` for `|x| <= 0.46875`.
fn erf_small<T: Real>(x: T) -> T {
    let ysq = x * x;
    let mut num = T::lit(ERF_A[4]) * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + T::lit(ERF_A[i])) * ysq;
        den = (den + T::lit(ERF_B[i])) * ysq;
    }
    x * (num + T::lit(ERF_A[3])) / (den + T::lit(ERF_B[3]))
}

/// Scaled complementary error function `exp(y^2) erfc(y)` for `y >= 0.46875`.
fn erfcx_large<T: Real>(y: T) -> T {
    if y <= T::lit(4.0) {
        let mut num = T::lit(ERFC_C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + T::lit(ERFC_C[i])) * y;
            den = (den + T::lit(ERFC_D[i])) * y;
        }
        (num + T::lit(ERFC_C[7])) / (den + T::lit(ERFC_D[7]))
    } else {
        let ysq = (y * y).recip();
        let mut num = T::lit(ERFC_P[5]) * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + T::lit(ERFC_P[i])) * ysq;
            den = (den + T::lit(ERFC_Q[i])) * ysq;
        }
        let r = ysq * (num + T::lit(ERFC_P[4])) / (den + T::lit(ERFC_Q[4]));
        (T::FRAC_2_SQRT_PI() * T::lit(0.5) - r) / y
    }
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    let ax = x.abs();
    if ax <= T::lit(ERF_SMALL) {
        return T::one() - erf_small(x);
    }
    let pos = (-ax * ax).exp() * erfcx_large(ax);
    if x > T::zero() { pos } else { T::lit(2.0) - pos }
}

/// Standard normal log-density.
#[inline]
pub fn norm_log_pdf<T: Real>(x: T) -> T {
    -T::lit(0.5) * (x * x + T::lit(LN_2PI))
}

#[inline]
pub fn norm_pdf<T: Real>(x: T) -> T {
    norm_log_pdf(x).exp()
}

/// Standard normal CDF.
pub fn norm_cdf<T: Real>(x: T) -> T {
    let y = -x * T::FRAC_1_SQRT_2();
    T::lit(0.5) * erfc(y)
}

/// `log Phi(x)`, accurate in both tails.
pub fn norm_log_cdf<T: Real>(x: T) -> T {
    if x == T::neg_infinity() {
        return T::neg_infinity();
    }
    if x == T::infinity() {
        return T::zero();
    }
    let y = -x * T::FRAC_1_SQRT_2();
    if y >= T::lit(ERF_SMALL) {
        -(y * y) + erfcx_large(y).ln() - T::LN_2()
    } else if y > -T::lit(ERF_SMALL) {
        (T::lit(0.5) * (T::one() - erf_small(y))).ln()
    } else {
        let ay = -y;
        let upper = T::lit(0.5) * (-(ay * ay)).exp() * erfcx_large(ay);
        (-upper).ln_1p()
    }
}

/// Inverse Mills ratio `phi(x) / Phi(x)`.
///
/// Below `x = -0.66` the ratio is formed from the scaled complementary
/// error function, so neither numerator nor denominator is ever evaluated
/// on its own; this keeps full relative accuracy as `x -> -inf`, where the
/// ratio behaves like `-x`.
pub fn inv_mills<T: Real>(x: T) -> T {
    if x == T::neg_infinity() {
        return T::infinity();
    }
    let y = -x * T::FRAC_1_SQRT_2();
    if y >= T::lit(ERF_SMALL) {
        T::lit(SQRT_2_OVER_PI) / erfcx_large(y)
    } else {
        (norm_log_pdf(x) - norm_log_cdf(x)).exp()
    }
}

/// `(phi(x), Phi(x), log Phi(x))` for a single argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalTriple<T> {
    pub pdf: T,
    pub cdf: T,
    pub log_cdf: T,
}

pub fn std_normal_pdf_cdf<T: Real>(x: T) -> NormalTriple<T> {
    let log_cdf = norm_log_cdf(x);
    NormalTriple { pdf: norm_pdf(x), cdf: log_cdf.exp(), log_cdf }
}

/// `log(1 - exp(d))` for `d <= 0`.
pub fn log1mexp<T: Real>(d: T) -> T {
    if d > -T::LN_2() {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// `log(Phi(b) - Phi(a))` for `a <= b`; either end may be infinite.
pub fn log_diff_cdf<T: Real>(a: T, b: T) -> T {
    if a >= b {
        return T::neg_infinity();
    }
    if a >= T::zero() {
        // both in the upper half: work with survival functions
        let la = norm_log_cdf(-a);
        let lb = norm_log_cdf(-b);
        la + log1mexp(lb - la)
    } else {
        let la = norm_log_cdf(a);
        let lb = norm_log_cdf(b);
        if la == T::neg_infinity() {
            return lb;
        }
        lb + log1mexp(la - lb)
    }
}

// Acklam's rational approximation, used only as a starting point.
const ACK_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const ACK_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const ACK_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const ACK_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

fn acklam_tail(q: f64) -> f64 {
    (((((ACK_C[0] * q + ACK_C[1]) * q + ACK_C[2]) * q + ACK_C[3]) * q + ACK_C[4]) * q + ACK_C[5])
        / ((((ACK_D[0] * q + ACK_D[1]) * q + ACK_D[2]) * q + ACK_D[3]) * q + 1.0)
}

/// Rough quantile from `log p` (and `log(1 - p)` for the upper tail).
fn quantile_guess(log_p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    if log_p < -700.0 {
        let t = -2.0 * log_p;
        return -(t - t.ln() - LN_2PI).sqrt();
    }
    let p = log_p.exp();
    if p < P_LOW {
        acklam_tail((-2.0 * log_p).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((ACK_A[0] * r + ACK_A[1]) * r + ACK_A[2]) * r + ACK_A[3]) * r + ACK_A[4]) * r + ACK_A[5])
            * q
            / (((((ACK_B[0] * r + ACK_B[1]) * r + ACK_B[2]) * r + ACK_B[3]) * r + ACK_B[4]) * r + 1.0)
    } else {
        let log_q = (-log_p.exp_m1()).ln();
        -acklam_tail((-2.0 * log_q).sqrt())
    }
}

/// Standard normal quantile of `exp(log_p)`.
///
/// Newton's method on `log Phi(x) - log_p`, which is concave and
/// increasing in `x`, so the iteration converges from any start.
pub fn norm_quantile_log<T: Real>(log_p: T) -> T {
    if log_p >= T::zero() {
        return T::infinity();
    }
    if log_p == T::neg_infinity() {
        return T::neg_infinity();
    }
    let mut x = T::lit(quantile_guess(log_p.as_f64()));
    let tol = T::lit(4.0) * T::epsilon();
    for _ in 0..100 {
        let g = norm_log_cdf(x) - log_p;
        let step = g / inv_mills(x);
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= tol * (T::one() + x.abs()) {
            break;
        }
    }
    x
}

/// Standard normal quantile.
pub fn norm_quantile<T: Real>(p: T) -> T {
    if p <= T::zero() {
        return T::neg_infinity();
    }
    if p >= T::one() {
        return T::infinity();
    }
    if p > T::lit(0.5) {
        -norm_quantile_log((T::one() - p).ln())
    } else {
        norm_quantile_log(p.ln())
    }
}
