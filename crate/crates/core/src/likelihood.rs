//! Left-truncation-corrected log-normal likelihood on augmented event
//! times, the full-conditional log-targets of each parameter block, and
//! analytic gradients for the regression coefficients.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{GroupStructure, SurvivalDataset};
use crate::dists::special::norm_log_cdf;
use crate::dists::truncation_score;
use crate::error::{Error, Result};
use crate::scalar::Real;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Full parameter state: regression coefficients, intercept, error
/// variance, group scales and the global regularization parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    pub beta: Array1<T>,
    pub gamma: Array1<T>,
    pub mu: T,
    pub sigma2: T,
    pub tau2: Array1<T>,
    pub lambda2: T,
}

impl<T: Real> ModelParameters<T> {
    pub fn zeros(p: usize, q: usize, k: usize) -> Self {
        Self {
            beta: Array1::zeros(p),
            gamma: Array1::zeros(q),
            mu: T::zero(),
            sigma2: T::one(),
            tau2: Array1::ones(k),
            lambda2: T::one(),
        }
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    pub fn check(&self) -> Result<()> {
        let finite = self.beta.iter().chain(self.gamma.iter()).all(|v| v.is_finite()) && self.mu.is_finite();
        if !finite {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        if !(self.sigma2 > T::zero()) || !(self.lambda2 > T::zero()) || self.tau2.iter().any(|&t| !(t > T::zero())) {
            return Err(Error::InvalidParameter("variance parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Hyperparameters of the priors on `mu`, `sigma2` and `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub mu0: f64,
    pub h0: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    pub v2: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { mu0: 0.0, h0: 1e6, a_sigma: 0.7, b_sigma: 0.7, v2: 1e6 }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.mu0.is_finite() && self.h0 > 0.0 && self.a_sigma > 0.0 && self.b_sigma > 0.0 && self.v2 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("prior hyperparameters out of range: {self:?}")))
        }
    }
}

/// Imputed event times, one per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState<T> {
    pub t: Array1<T>,
}

impl<T: Real> AugmentedState<T> {
    pub fn log_t(&self) -> Array1<T> {
        self.t.mapv(|v| v.ln())
    }
}

/// Design and observation bounds in the form the likelihood evaluates
/// against. `xt` and `zt` are stored transposes for gradient products.
#[derive(Debug, Clone)]
pub struct ModelFrame<T> {
    pub x: Array2<T>,
    pub xt: Array2<T>,
    pub z: Array2<T>,
    pub zt: Array2<T>,
    pub entry: Array1<T>,
    pub lower: Array1<T>,
    pub upper: Array1<T>,
    /// `log c0` for delayed-entry rows, `None` when `c0 = 0`.
    pub log_entry: Vec<Option<T>>,
    pub groups: GroupStructure,
}

impl<T: Real> ModelFrame<T> {
    pub fn new(
        x: Array2<T>,
        z: Array2<T>,
        entry: Array1<T>,
        lower: Array1<T>,
        upper: Array1<T>,
        groups: GroupStructure,
    ) -> Self {
        let log_entry = entry.iter().map(|&c| if c > T::zero() { Some(c.ln()) } else { None }).collect();
        let xt = x.t().as_standard_layout().into_owned();
        let zt = z.t().as_standard_layout().into_owned();
        Self { x, xt, z, zt, entry, lower, upper, log_entry, groups }
    }

    /// Frame on the raw covariates of a dataset.
    pub fn from_dataset(d: &SurvivalDataset<T>) -> Self {
        Self::new(d.x().clone(), d.z().clone(), d.entry().clone(), d.lower().clone(), d.upper().clone(), d.groups().clone())
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn q(&self) -> usize {
        self.z.ncols()
    }
}

/// `eta_i = mu + x_i' beta + z_i' gamma`.
pub fn linear_predictor<T: Real>(theta: &ModelParameters<T>, frame: &ModelFrame<T>) -> Array1<T> {
    let mut eta = Array1::from_elem(frame.n(), theta.mu);
    if frame.p() > 0 {
        eta += &frame.x.dot(&theta.beta);
    }
    if frame.q() > 0 {
        eta += &frame.z.dot(&theta.gamma);
    }
    eta
}

/// Sum of truncation-corrected log densities and, optionally, the score
/// `a_i = d loglik / d eta_i`.
pub(crate) fn loglik_terms<T: Real>(
    eta: &Array1<T>,
    log_t: &Array1<T>,
    sigma: T,
    log_entry: &[Option<T>],
    mut score: Option<&mut Array1<T>>,
) -> T {
    let sigma2 = sigma * sigma;
    let const_term = -T::lit(HALF_LN_2PI) - sigma.ln();
    let mut total = T::zero();
    for i in 0..eta.len() {
        let (e, lt) = (eta[i], log_t[i]);
        let r = lt - e;
        let zr = r / sigma;
        let mut li = const_term - lt - T::lit(0.5) * zr * zr;
        if let Some(lc) = log_entry[i] {
            li -= norm_log_cdf((e - lc) / sigma);
        }
        total += li;
        if let Some(a) = score.as_deref_mut() {
            a[i] = r / sigma2 + truncation_score(e, log_entry[i], sigma);
        }
    }
    total
}

/// Complete-data log-likelihood with the delayed-entry correction:
/// `sum_i log f(t_i | eta_i, sigma) - log S(c0_i | eta_i, sigma)`.
pub fn complete_data_loglik<T: Real>(theta: &ModelParameters<T>, aug: &AugmentedState<T>, frame: &ModelFrame<T>) -> T {
    let eta = linear_predictor(theta, frame);
    loglik_terms(&eta, &aug.log_t(), theta.sigma(), &frame.log_entry, None)
}

/// `1 / (sigma2 tau2_k(j))` for every coefficient.
pub(crate) fn beta_prior_precision<T: Real>(sigma2: T, tau2: &Array1<T>, groups: &GroupStructure) -> Array1<T> {
    Array1::from_iter(groups.membership().iter().map(|&k| (sigma2 * tau2[k]).recip()))
}

/// Log-target for `beta` with everything else held fixed. Evaluations only
/// touch `X beta`; the rest of the linear predictor is cached.
pub struct BetaTarget<'a, T> {
    frame: &'a ModelFrame<T>,
    base: Array1<T>,
    log_t: &'a Array1<T>,
    sigma: T,
    precision: Array1<T>,
}

impl<'a, T: Real> BetaTarget<'a, T> {
    pub fn new(theta: &ModelParameters<T>, log_t: &'a Array1<T>, frame: &'a ModelFrame<T>) -> Self {
        let mut base = Array1::from_elem(frame.n(), theta.mu);
        if frame.q() > 0 {
            base += &frame.z.dot(&theta.gamma);
        }
        let precision = beta_prior_precision(theta.sigma2, &theta.tau2, &frame.groups);
        Self { frame, base, log_t, sigma: theta.sigma(), precision }
    }

    pub fn eval(&self, beta: &Array1<T>) -> (T, Array1<T>) {
        let eta = &self.base + &self.frame.x.dot(beta);
        let mut a = Array1::zeros(eta.len());
        let ll = loglik_terms(&eta, self.log_t, self.sigma, &self.frame.log_entry, Some(&mut a));
        let mut grad = self.frame.xt.dot(&a);
        let mut prior = T::zero();
        for j in 0..beta.len() {
            let b = beta[j];
            prior -= T::lit(0.5) * b * b * self.precision[j];
            grad[j] -= b * self.precision[j];
        }
        (ll + prior, grad)
    }
}

/// Log-target for `gamma`; the prior is `Normal(0, v2)` per coefficient.
pub struct GammaTarget<'a, T> {
    frame: &'a ModelFrame<T>,
    base: Array1<T>,
    log_t: &'a Array1<T>,
    sigma: T,
    precision: T,
}

impl<'a, T: Real> GammaTarget<'a, T> {
    pub fn new(theta: &ModelParameters<T>, log_t: &'a Array1<T>, frame: &'a ModelFrame<T>, prior: &PriorConfig) -> Self {
        let mut base = Array1::from_elem(frame.n(), theta.mu);
        if frame.p() > 0 {
            base += &frame.x.dot(&theta.beta);
        }
        Self { frame, base, log_t, sigma: theta.sigma(), precision: T::lit(prior.v2).recip() }
    }

    pub fn eval(&self, gamma: &Array1<T>) -> (T, Array1<T>) {
        let eta = &self.base + &self.frame.z.dot(gamma);
        let mut a = Array1::zeros(eta.len());
        let ll = loglik_terms(&eta, self.log_t, self.sigma, &self.frame.log_entry, Some(&mut a));
        let mut grad = self.frame.zt.dot(&a);
        let mut prior = T::zero();
        for j in 0..gamma.len() {
            prior -= T::lit(0.5) * gamma[j] * gamma[j] * self.precision;
            grad[j] -= gamma[j] * self.precision;
        }
        (ll + prior, grad)
    }
}

/// `beta` full-conditional log density (up to a constant) and its gradient
/// `X' a + b`, `b_j = -beta_j / (sigma2 tau2_k(j))`.
pub fn beta_log_target_and_grad<T: Real>(
    beta: &Array1<T>,
    fixed: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
) -> (T, Array1<T>) {
    let log_t = aug.log_t();
    BetaTarget::new(fixed, &log_t, frame).eval(beta)
}

/// `gamma` full-conditional log density (up to a constant) and its
/// gradient `Z' a - gamma / v2`.
pub fn gamma_log_target_and_grad<T: Real>(
    gamma: &Array1<T>,
    fixed: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
) -> (T, Array1<T>) {
    let log_t = aug.log_t();
    GammaTarget::new(fixed, &log_t, frame, prior).eval(gamma)
}

/// `sigma2` full-conditional log density up to a constant, including the
/// `-(p/2) log sigma2` normalizer of the conditional prior on `beta`.
pub fn sigma2_log_target<T: Real>(
    sigma2: T,
    fixed: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
) -> Result<T> {
    if !(sigma2 > T::zero()) {
        return Err(Error::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    let eta = linear_predictor(fixed, frame);
    Ok(sigma2_target_cached(sigma2, &eta, &aug.log_t(), fixed, frame, prior))
}

pub(crate) fn sigma2_target_cached<T: Real>(
    sigma2: T,
    eta: &Array1<T>,
    log_t: &Array1<T>,
    fixed: &ModelParameters<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
) -> T {
    let ll = loglik_terms(eta, log_t, sigma2.sqrt(), &frame.log_entry, None);
    let mut quad = T::zero();
    for (j, &k) in frame.groups.membership().iter().enumerate() {
        quad += fixed.beta[j] * fixed.beta[j] / fixed.tau2[k];
    }
    let p = T::from_usize_lossy(fixed.beta.len());
    let log_s2 = sigma2.ln();
    ll - T::lit(0.5) * quad / sigma2 - T::lit(0.5) * p * log_s2 - (T::lit(prior.a_sigma) + T::one()) * log_s2
        - T::lit(prior.b_sigma) / sigma2
}

/// `mu` full-conditional log density up to a constant.
pub fn mu_log_target<T: Real>(
    mu: T,
    fixed: &ModelParameters<T>,
    aug: &AugmentedState<T>,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
) -> T {
    let mut eta = linear_predictor(fixed, frame);
    eta += mu - fixed.mu;
    mu_target_cached(mu, &eta, &aug.log_t(), fixed.sigma(), frame, prior)
}

pub(crate) fn mu_target_cached<T: Real>(
    mu: T,
    eta: &Array1<T>,
    log_t: &Array1<T>,
    sigma: T,
    frame: &ModelFrame<T>,
    prior: &PriorConfig,
) -> T {
    let ll = loglik_terms(eta, log_t, sigma, &frame.log_entry, None);
    let d = mu - T::lit(prior.mu0);
    ll - T::lit(0.5) * d * d / T::lit(prior.h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{lognormal_logpdf, lognormal_logsurv, LogNormalParams};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn frame(entry: Array1<f64>, x: Array2<f64>, z: Array2<f64>) -> ModelFrame<f64> {
        let n = entry.len();
        let p = x.ncols();
        ModelFrame::new(x, z, entry, Array1::ones(n), Array1::ones(n), GroupStructure::singletons(p))
    }

    #[test]
    fn single_subject_value() {
        let f = frame(array![0.0], Array2::zeros((1, 0)), Array2::zeros((1, 0)));
        let theta = ModelParameters::zeros(0, 0, 0);
        let aug = AugmentedState { t: array![1.0] };
        assert_relative_eq!(complete_data_loglik(&theta, &aug, &f), -0.918_938_533_204_672_7, epsilon = 1e-12);
    }

    #[test]
    fn no_entry_equals_plain_lognormal_sum() {
        let f = frame(array![0.0, 0.0, 0.0], array![[0.5], [-1.0], [2.0]], array![[1.0], [0.0], [-1.0]]);
        let mut theta = ModelParameters::zeros(1, 1, 1);
        theta.beta[0] = 0.3;
        theta.gamma[0] = -0.2;
        theta.mu = 1.1;
        theta.sigma2 = 0.64;
        let aug = AugmentedState { t: array![2.0, 0.7, 5.0] };
        let eta = linear_predictor(&theta, &f);
        let plain: f64 = (0..3)
            .map(|i| lognormal_logpdf(aug.t[i], &LogNormalParams::new(eta[i], 0.8).unwrap()).unwrap())
            .sum();
        assert_relative_eq!(complete_data_loglik(&theta, &aug, &f), plain, epsilon = 1e-12);
    }

    #[test]
    fn entry_correction_subtracts_log_survival() {
        let f = frame(array![0.5], Array2::zeros((1, 0)), Array2::zeros((1, 0)));
        let mut theta = ModelParameters::zeros(0, 0, 0);
        theta.mu = 0.2;
        let aug = AugmentedState { t: array![1.5] };
        let p = LogNormalParams::new(0.2, 1.0).unwrap();
        let expect = lognormal_logpdf(1.5, &p).unwrap() - lognormal_logsurv(0.5, &p);
        assert_relative_eq!(complete_data_loglik(&theta, &aug, &f), expect, epsilon = 1e-12);
    }

    #[test]
    fn complete_data_score_is_residual_without_entry() {
        let f = frame(array![0.0, 0.0], array![[1.0], [2.0]], Array2::zeros((2, 0)));
        let mut theta = ModelParameters::zeros(1, 0, 1);
        theta.mu = 0.5;
        theta.tau2[0] = 1e300;
        let aug = AugmentedState { t: array![2.0, 3.0] };
        let (_, g) = beta_log_target_and_grad(&array![0.0], &theta, &aug, &f);
        let expect = (2.0_f64.ln() - 0.5) * 1.0 + (3.0_f64.ln() - 0.5) * 2.0;
        assert_relative_eq!(g[0], expect, epsilon = 1e-12);
    }

    #[test]
    fn zero_coefficients_have_zero_prior_gradient() {
        let f = frame(array![0.0, 0.0], array![[1.0], [2.0]], array![[0.5], [-0.5]]);
        let mut theta = ModelParameters::zeros(1, 1, 1);
        theta.tau2[0] = 0.01;
        let aug = AugmentedState { t: array![1.0, 1.0] };
        // log t = 0 = eta at zero coefficients, so the likelihood part vanishes too
        let (_, gb) = beta_log_target_and_grad(&array![0.0], &theta, &aug, &f);
        let (_, gg) = gamma_log_target_and_grad(&array![0.0], &theta, &aug, &f, &PriorConfig::default());
        assert_eq!(gb[0], 0.0);
        assert_eq!(gg[0], 0.0);
    }

    #[test]
    fn flat_gamma_prior_limit() {
        let f = frame(array![0.0, 0.4], array![[1.0], [2.0]], array![[0.5], [-0.5]]);
        let mut theta = ModelParameters::zeros(1, 1, 1);
        theta.beta[0] = 0.2;
        let aug = AugmentedState { t: array![1.3, 0.9] };
        let gamma = array![0.7];
        let flat = PriorConfig { v2: f64::INFINITY, ..PriorConfig::default() };
        let (_, g) = gamma_log_target_and_grad(&gamma, &theta, &aug, &f, &flat);
        let narrow = PriorConfig { v2: 2.0, ..PriorConfig::default() };
        let (_, g2) = gamma_log_target_and_grad(&gamma, &theta, &aug, &f, &narrow);
        assert_relative_eq!(g[0] - g2[0], 0.7 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma2_target_difference_by_hand() {
        let f = frame(array![0.0, 0.0], Array2::zeros((2, 0)), Array2::zeros((2, 0)));
        let theta = ModelParameters::zeros(0, 0, 0);
        let aug = AugmentedState { t: array![2.0_f64.exp(), (-1.0_f64).exp()] };
        let prior = PriorConfig::default();
        let t1 = sigma2_log_target(1.0, &theta, &aug, &f, &prior).unwrap();
        let t2 = sigma2_log_target(2.0, &theta, &aug, &f, &prior).unwrap();
        // residuals 2 and -1: loglik(s2) = -n/2 log s2 - 5/(2 s2) + const
        // prior: -(a+1) log s2 - b/s2
        let hand = |s2: f64| -s2.ln() - 2.5 / s2 - 1.7 * s2.ln() - 0.7 / s2;
        assert_relative_eq!(t1 - t2, hand(1.0) - hand(2.0), epsilon = 1e-10);
        assert!(sigma2_log_target(0.0, &theta, &aug, &f, &prior).is_err());
    }

    #[test]
    fn mu_flat_prior_maximizer_is_mean_residual() {
        let f = frame(array![0.0, 0.0, 0.0], array![[1.0], [0.0], [-2.0]], Array2::zeros((3, 0)));
        let mut theta = ModelParameters::zeros(1, 0, 1);
        theta.beta[0] = 0.5;
        let aug: AugmentedState<f64> = AugmentedState { t: array![3.0, 1.5, 0.2] };
        let prior = PriorConfig { h0: f64::INFINITY, ..PriorConfig::default() };
        let mean: f64 = (0..3).map(|i| aug.t[i].ln() - f.x[[i, 0]] * 0.5).sum::<f64>() / 3.0;
        let at = |m: f64| mu_log_target(m, &theta, &aug, &f, &prior);
        assert!(at(mean) > at(mean + 1e-4));
        assert!(at(mean) > at(mean - 1e-4));
        assert_relative_eq!((at(mean + 1e-3) - at(mean - 1e-3)) / 2e-3, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn permutation_invariance() {
        let f = frame(array![0.0, 0.3, 0.1], array![[1.0], [2.0], [0.0]], Array2::zeros((3, 0)));
        let g = frame(array![0.1, 0.0, 0.3], array![[0.0], [1.0], [2.0]], Array2::zeros((3, 0)));
        let mut theta = ModelParameters::zeros(1, 0, 1);
        theta.beta[0] = -0.4;
        let a = AugmentedState { t: array![1.0, 2.0, 0.5] };
        let b = AugmentedState { t: array![0.5, 1.0, 2.0] };
        assert_relative_eq!(complete_data_loglik(&theta, &a, &f), complete_data_loglik(&theta, &b, &g), epsilon = 1e-12);
    }
}
