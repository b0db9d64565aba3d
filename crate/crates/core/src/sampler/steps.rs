//! Individual Gibbs-sweep updates other than the HMC moves.

use ndarray::Array1;
use rand::Rng;

use crate::data::GroupStructure;
use crate::dists::{sample_inverse_gaussian, sample_truncated_lognormal, std_normal, uniform_open, LogNormalParams};
use crate::error::{Error, Result};
use crate::likelihood::{linear_predictor, mu_target_cached, sigma2_target_cached, AugmentedState, ModelFrame, ModelParameters, PriorConfig};
use crate::scalar::Real;

/// Largest inverse-Gaussian mean used in the `tau2` update; groups whose
/// coefficients are numerically zero are drawn at this cap.
pub const IG_MEAN_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhOutcome<T> {
    pub value: T,
    pub accepted: bool,
    pub accept_prob: T,
}

pub(crate) fn augment_with_eta<T: Real, R: Rng + ?Sized>(
    eta: &Array1<T>,
    sigma: T,
    t: &mut Array1<T>,
    frame: &ModelFrame<T>,
    rng: &mut R,
) -> Result<()> {
    for i in 0..t.len() {
        let (lo, hi) = (frame.lower[i].max(frame.entry[i]), frame.upper[i]);
        if frame.lower[i] == hi {
            continue;
        }
        if lo > hi {
            return Err(Error::EmptyInterval { subject: i, lo: lo.as_f64(), hi: hi.as_f64() });
        }
        let p = LogNormalParams { eta: eta[i], sigma };
        t[i] = sample_truncated_lognormal(&p, lo, hi, rng)?;
    }
    Ok(())
}

/// Redraws every censored event time from the log-normal restricted to
/// `[max(cL, c0), cU]`. Exact observations are left as they are.
pub fn augment_event_times<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    rng: &mut R,
) -> Result<AugmentedState<T>> {
    let eta = linear_predictor(theta, frame);
    let mut t = aug.t.clone();
    augment_with_eta(&eta, theta.sigma(), &mut t, frame, rng)?;
    Ok(AugmentedState { t })
}

fn metropolis<T: Real, R: Rng + ?Sized>(log_ratio: T, rng: &mut R) -> (bool, T) {
    let prob = if log_ratio >= T::zero() { T::one() } else { log_ratio.exp() };
    let u: T = uniform_open(rng);
    (log_ratio.is_finite() && u.ln() < log_ratio, if log_ratio.is_nan() { T::zero() } else { prob })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn update_sigma2_cached<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    eta: &Array1<T>,
    log_t: &Array1<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
    rng: &mut R,
    proposal_sd: T,
    current_target: Option<T>,
) -> Result<MhOutcome<T>> {
    let current = theta.sigma2;
    let cur = current_target.unwrap_or_else(|| sigma2_target_cached(current, eta, log_t, theta, frame, prior));
    if !cur.is_finite() {
        return Err(Error::Other(format!("non-finite sigma2 target ({cur}) at sigma2 = {current}")));
    }
    let z: T = std_normal(rng);
    let proposed = (current.ln() + proposal_sd * z).exp();
    let prop = if proposed > T::zero() && proposed.is_finite() {
        sigma2_target_cached(proposed, eta, log_t, theta, frame, prior)
    } else {
        T::neg_infinity()
    };
    // random walk on log sigma2: Jacobian log(proposed) - log(current)
    let log_ratio = prop - cur + proposed.ln() - current.ln();
    let (accepted, accept_prob) = metropolis(log_ratio, rng);
    Ok(MhOutcome { value: if accepted { proposed } else { current }, accepted, accept_prob })
}

/// Random-walk Metropolis-Hastings step for `sigma2` on the log scale.
pub fn update_sigma2<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
    rng: &mut R,
    proposal_sd: T,
) -> Result<MhOutcome<T>> {
    let eta = linear_predictor(theta, frame);
    update_sigma2_cached(theta, &eta, &aug.log_t(), frame, prior, rng, proposal_sd, None)
}

pub(crate) fn update_mu_cached<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    eta: &Array1<T>,
    log_t: &Array1<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
    rng: &mut R,
    proposal_sd: T,
) -> Result<MhOutcome<T>> {
    let sigma = theta.sigma();
    let cur = mu_target_cached(theta.mu, eta, log_t, sigma, frame, prior);
    if !cur.is_finite() {
        return Err(Error::Other(format!("non-finite mu target ({cur}) at mu = {}", theta.mu)));
    }
    let z: T = std_normal(rng);
    let proposed = theta.mu + proposal_sd * z;
    let shifted = eta.mapv(|e| e + (proposed - theta.mu));
    let prop = mu_target_cached(proposed, &shifted, log_t, sigma, frame, prior);
    let (accepted, accept_prob) = metropolis(prop - cur, rng);
    Ok(MhOutcome { value: if accepted { proposed } else { theta.mu }, accepted, accept_prob })
}

/// Symmetric random-walk Metropolis step for the intercept.
pub fn update_mu<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
    rng: &mut R,
    proposal_sd: T,
) -> Result<MhOutcome<T>> {
    let eta = linear_predictor(theta, frame);
    update_mu_cached(theta, &eta, &aug.log_t(), frame, prior, rng, proposal_sd)
}

/// Mean and shape of the inverse-Gaussian full conditional of `1 / tau2_k`:
/// `(sqrt(m_k lambda2 sigma2 / |beta_k|^2), m_k lambda2)`, mean capped at
/// [`IG_MEAN_CAP`].
pub fn tau2_conditional<T: Real>(norm2: T, size: usize, lambda2: T, sigma2: T) -> (T, T) {
    let m = T::from_usize_lossy(size);
    let cap = T::lit(IG_MEAN_CAP);
    let mean = if norm2 < T::lit(1e-300) { cap } else { (m * lambda2 * sigma2 / norm2).sqrt().min(cap) };
    (mean, m * lambda2)
}

/// Gibbs update of every group scale `tau2_k`.
pub fn update_tau2<T: Real, R: Rng + ?Sized>(
    theta: &ModelParameters<T>,
    groups: &GroupStructure,
    rng: &mut R,
) -> Result<Array1<T>> {
    let mut out = Array1::zeros(groups.n_groups());
    for k in 0..groups.n_groups() {
        let norm2: T = groups.members(k).iter().map(|&j| theta.beta[j] * theta.beta[j]).sum();
        let (mean, shape) = tau2_conditional(norm2, groups.size(k), theta.lambda2, theta.sigma2);
        let inv = sample_inverse_gaussian(mean, shape, rng)?;
        out[k] = inv.recip();
    }
    Ok(out)
}

/// `lambda2 = (p + K) / sum_k m_k mean(tau2_k)` given per-group averages.
pub fn lambda2_from_mean_tau2<T: Real>(mean_tau2: &Array1<T>, sizes: &[usize]) -> T {
    let p: usize = sizes.iter().sum();
    let denom: T = sizes.iter().zip(mean_tau2.iter()).map(|(&m, &t)| T::from_usize_lossy(m) * t).sum();
    T::from_usize_lossy(p + sizes.len()) / denom
}

/// Monte Carlo EM update of `lambda2` from recent `tau2` draws.
pub fn update_lambda2_mcem<T: Real>(tau2_history: &[Array1<T>], sizes: &[usize]) -> Result<T> {
    let first = tau2_history.first().ok_or_else(|| Error::InvalidParameter("empty tau2 history".into()))?;
    if first.len() != sizes.len() {
        return Err(Error::Dimension { expected: sizes.len(), actual: first.len() });
    }
    let mut mean = Array1::zeros(sizes.len());
    for draw in tau2_history {
        mean += draw;
    }
    mean /= T::from_usize_lossy(tau2_history.len());
    Ok(lambda2_from_mean_tau2(&mean, sizes))
}
