use rand::Rng;

use super::rng::uniform_open;
use super::special::{inv_mills, norm_log_cdf, norm_log_pdf, norm_quantile_log};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Log-normal law of an event time: `log T ~ Normal(eta, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalParams<T> {
    pub eta: T,
    pub sigma: T,
}

impl<T: Real> LogNormalParams<T> {
    pub fn new(eta: T, sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be finite, got {eta}")));
        }
        Ok(Self { eta, sigma })
    }
}

pub fn lognormal_logpdf<T: Real>(t: T, p: &LogNormalParams<T>) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidParameter(format!("log-normal density needs t > 0, got {t}")));
    }
    let lt = t.ln();
    Ok(norm_log_pdf((lt - p.eta) / p.sigma) - p.sigma.ln() - lt)
}

/// `log S(t) = log Phi((eta - log t) / sigma)`; `S(0) = 1`.
pub fn lognormal_logsurv<T: Real>(t: T, p: &LogNormalParams<T>) -> T {
    debug_assert!(t >= T::zero());
    if t <= T::zero() {
        return T::zero();
    }
    norm_log_cdf((p.eta - t.ln()) / p.sigma)
}

/// Draws from a standard normal restricted to `[a, b]` by inverting the
/// CDF in log space. Intervals in the upper half are reflected so the
/// inversion always works against the lower tail.
pub fn sample_truncated_std_normal<T: Real, R: Rng + ?Sized>(a: T, b: T, rng: &mut R) -> T {
    debug_assert!(a <= b);
    if a == b {
        return a;
    }
    if a >= T::zero() {
        return -sample_truncated_std_normal(-b, -a, rng);
    }
    let la = norm_log_cdf(a);
    let lb = norm_log_cdf(b);
    let u: T = uniform_open(rng);
    // log(u Phi(b) + (1 - u) Phi(a))
    let lp = lb + (u + (T::one() - u) * (la - lb).exp()).ln();
    let x = norm_quantile_log(lp);
    x.max(a).min(b)
}

/// Draws from the log-normal restricted to `[lo, hi]`; `hi` may be `+inf`.
pub fn sample_truncated_lognormal<T: Real, R: Rng + ?Sized>(
    p: &LogNormalParams<T>,
    lo: T,
    hi: T,
    rng: &mut R,
) -> Result<T> {
    if lo > hi || lo < T::zero() || lo.is_nan() || hi.is_nan() {
        return Err(Error::InvalidParameter(format!("bad truncation interval [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(lo);
    }
    let a = if lo > T::zero() { (lo.ln() - p.eta) / p.sigma } else { T::neg_infinity() };
    let b = if hi.is_finite() { (hi.ln() - p.eta) / p.sigma } else { T::infinity() };
    let z = sample_truncated_std_normal(a, b, rng);
    let t = (p.eta + p.sigma * z).exp();
    Ok(t.max(lo).min(hi))
}

/// Log-normal CDF restricted to `[lo, hi]`, evaluated at `t`.
pub fn truncated_lognormal_cdf<T: Real>(t: T, p: &LogNormalParams<T>, lo: T, hi: T) -> T {
    use super::special::norm_cdf;
    if t <= lo {
        return T::zero();
    }
    if t >= hi {
        return T::one();
    }
    let z = |v: T| if v > T::zero() { norm_cdf((v.ln() - p.eta) / p.sigma) } else { T::zero() };
    let fhi = if hi.is_finite() { z(hi) } else { T::one() };
    (z(t) - z(lo)) / (fhi - z(lo))
}

/// Derivative of `-log S(c0)` with respect to `eta`: `-(1/sigma) phi(u)/Phi(u)`,
/// `u = (eta - log c0)/sigma`. Zero when there is no delayed entry.
#[inline]
pub(crate) fn truncation_score<T: Real>(eta: T, log_c0: Option<T>, sigma: T) -> T {
    match log_c0 {
        Some(lc) => -inv_mills((eta - lc) / sigma) / sigma,
        None => T::zero(),
    }
}
