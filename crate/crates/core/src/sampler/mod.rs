//! Gibbs sampler: data augmentation, HMC for the regression coefficients,
//! random-walk Metropolis for `sigma2` and `mu`, inverse-Gaussian draws for
//! the group scales and Monte Carlo EM for `lambda2`.

pub mod diagnostics;
pub mod hmc;
pub mod steps;

use std::collections::VecDeque;

use ndarray::{s, Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::design::{FitDesign, PriorKind};
use crate::dists::{uniform_open, RngStream};
use crate::error::{Error, Result};
use crate::likelihood::{sigma2_target_cached, BetaTarget, GammaTarget, ModelFrame, ModelParameters, PriorConfig};
use crate::scalar::Real;

pub use diagnostics::{effective_sample_size, potential_scale_reduction, ConvergenceSummary, ParamDiagnostic};
pub use hmc::{hmc_update, leapfrog_transition, HmcOutcome};
pub use steps::{
    augment_event_times, lambda2_from_mean_tau2, tau2_conditional, update_lambda2_mcem, update_mu, update_sigma2,
    update_tau2, MhOutcome, IG_MEAN_CAP,
};

const HMC_TARGET_ACCEPT: f64 = 0.65;
const MH_TARGET_ACCEPT: f64 = 0.40;
const STEP_JITTER: f64 = 0.2;

/// Parameters kept fixed at the given values instead of being sampled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeldParameters {
    pub sigma2: Option<f64>,
    /// common value for every group
    pub tau2: Option<f64>,
    pub lambda2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_frac: f64,
    pub n_chains: usize,
    pub seed: u64,
    pub hmc_eps_beta: f64,
    pub hmc_eps_gamma: f64,
    pub hmc_steps: usize,
    pub mh_sd_logsigma2: f64,
    pub mh_sd_mu: f64,
    pub mcem_interval: usize,
    /// `None` averages every draw since the previous update.
    pub mcem_window: Option<usize>,
    pub lambda2_init: f64,
    pub thin: usize,
    /// Robbins-Monro step-size adaptation during burn-in.
    pub adapt: bool,
    /// Worker threads for running chains; 0 uses all cores.
    pub workers: usize,
    pub held: HeldParameters,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iter: 5000,
            burn_frac: 0.5,
            n_chains: 2,
            seed: 1,
            hmc_eps_beta: 0.1,
            hmc_eps_gamma: 0.01,
            hmc_steps: 20,
            mh_sd_logsigma2: 0.1,
            mh_sd_mu: 0.05,
            mcem_interval: 100,
            mcem_window: None,
            lambda2_init: 1.0,
            thin: 1,
            adapt: true,
            workers: 0,
            held: HeldParameters::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_iter < 2 {
            return bad("n_iter must be at least 2");
        }
        if !(self.burn_frac > 0.0 && self.burn_frac < 1.0) {
            return bad("burn_frac must lie in (0, 1)");
        }
        if self.n_chains == 0 {
            return bad("n_chains must be at least 1");
        }
        let steps = [self.hmc_eps_beta, self.hmc_eps_gamma, self.mh_sd_logsigma2, self.mh_sd_mu];
        if steps.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("step sizes and proposal sds must be positive");
        }
        if self.hmc_steps == 0 || self.mcem_interval == 0 || self.thin == 0 || self.mcem_window == Some(0) {
            return bad("hmc_steps, mcem_interval, mcem_window and thin must be at least 1");
        }
        if !(self.lambda2_init > 0.0 && self.lambda2_init.is_finite()) {
            return bad("lambda2_init must be positive");
        }
        let h = &self.held;
        if [h.sigma2, h.tau2, h.lambda2].iter().flatten().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("held parameter values must be positive");
        }
        Ok(())
    }

    /// Number of retained draws per chain.
    pub fn n_retained(&self) -> usize {
        ((1.0 - self.burn_frac) * self.n_iter as f64 / self.thin as f64).floor() as usize
    }

    /// First retained iteration is `burn_in() + thin - 1`.
    pub fn burn_in(&self) -> usize {
        self.n_iter - self.n_retained() * self.thin
    }
}

/// Post-burn-in acceptance rate per block; `None` if the block never ran
/// (no coefficients of that kind, or the parameter was held).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma2: Option<f64>,
    pub mu: Option<f64>,
}

/// Step sizes in force after burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunedSteps {
    pub hmc_eps_beta: f64,
    pub hmc_eps_gamma: f64,
    pub mh_sd_logsigma2: f64,
    pub mh_sd_mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput<T> {
    pub chain_id: usize,
    pub seed: u64,
    pub stream: u64,
    pub beta_names: Vec<String>,
    pub gamma_names: Vec<String>,
    pub group_labels: Vec<String>,
    /// draws x p, covariate scale
    pub beta: Array2<T>,
    /// draws x p, orthonormal working basis
    pub beta_ortho: Array2<T>,
    /// draws x q, covariate scale
    pub gamma: Array2<T>,
    pub mu: Array1<T>,
    pub sigma2: Array1<T>,
    /// draws x K
    pub tau2: Array2<T>,
    /// `lambda2` in force at each retained draw
    pub lambda2: Array1<T>,
    /// `lambda2` after every iteration
    pub lambda2_trace: Vec<T>,
    pub acceptance: AcceptanceRates,
    pub steps: TunedSteps,
}

impl<T: Real> ChainOutput<T> {
    pub fn n_draws(&self) -> usize {
        self.mu.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.beta_names.clone();
        names.extend(self.gamma_names.iter().cloned());
        names.push("mu".into());
        names.push("sigma2".into());
        names.extend(self.group_labels.iter().map(|l| format!("tau2_{l}")));
        names.push("lambda2".into());
        names
    }

    /// All retained draws as one matrix in [`column_names`](Self::column_names) order.
    pub fn table(&self) -> Array2<T> {
        let (p, q, k) = (self.beta.ncols(), self.gamma.ncols(), self.tau2.ncols());
        let mut out = Array2::zeros((self.n_draws(), p + q + k + 3));
        out.slice_mut(s![.., ..p]).assign(&self.beta);
        out.slice_mut(s![.., p..p + q]).assign(&self.gamma);
        out.column_mut(p + q).assign(&self.mu);
        out.column_mut(p + q + 1).assign(&self.sigma2);
        out.slice_mut(s![.., p + q + 2..p + q + 2 + k]).assign(&self.tau2);
        out.column_mut(p + q + k + 2).assign(&self.lambda2);
        out
    }
}

/// Output of [`run_chains`].
#[derive(Debug, Clone)]
pub struct ChainSet<T> {
    pub chains: Vec<ChainOutput<T>>,
    pub convergence: ConvergenceSummary,
}

/// Starting state: zero coefficients, unit group scales, and `mu`, `sigma2`
/// from the log of a crude per-subject midpoint.
pub fn initial_state<T: Real>(frame: &ModelFrame<T>, lambda2: T) -> (ModelParameters<T>, Array1<T>) {
    let n = frame.n();
    let three = T::lit(3.0);
    let half = T::lit(0.5);
    let mids: Vec<T> = (0..n).map(|i| ((frame.lower[i] + frame.upper[i].min(three * frame.lower[i])) * half).ln()).collect();
    let nf = T::from_usize_lossy(n);
    let mean = mids.iter().copied().sum::<T>() / nf;
    let var = if n > 1 {
        mids.iter().map(|&m| (m - mean) * (m - mean)).sum::<T>() / (nf - T::one())
    } else {
        T::zero()
    };
    let mut theta = ModelParameters::zeros(frame.p(), frame.q(), frame.groups.n_groups());
    theta.mu = mean;
    theta.sigma2 = if var > T::lit(1e-8) && var.is_finite() { var } else { T::one() };
    theta.lambda2 = lambda2;
    let t = Array1::from_shape_fn(n, |i| {
        let (lo, hi) = (frame.lower[i], frame.upper[i]);
        if lo == hi {
            lo
        } else if hi.is_finite() {
            half * (lo + hi)
        } else {
            T::lit(1.5) * lo
        }
    });
    (theta, t)
}

struct Adapter {
    log_step: f64,
    target: f64,
}

impl Adapter {
    fn new(step: f64, target: f64) -> Self {
        Self { log_step: step.ln(), target }
    }
    fn step(&self) -> f64 {
        self.log_step.exp()
    }
    fn update(&mut self, accept_prob: f64, iteration: usize) {
        let gain = (iteration as f64 + 10.0).powf(-0.6);
        self.log_step = (self.log_step + gain * (accept_prob - self.target)).clamp(-20.0, 5.0);
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    accepted: usize,
    tried: usize,
}

impl Tally {
    fn add(&mut self, accepted: bool) {
        self.tried += 1;
        self.accepted += accepted as usize;
    }
    fn rate(&self) -> Option<f64> {
        (self.tried > 0).then(|| self.accepted as f64 / self.tried as f64)
    }
}

fn abort(chain: usize, iteration: usize, block: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::ChainAbort { chain, iteration, block, detail: e.to_string() }
}

fn check_positive<T: Real>(v: T, chain: usize, iteration: usize, block: &'static str) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ChainAbort { chain, iteration, block, detail: format!("state left the positive reals: {v}") })
    }
}

/// Runs one chain on an already prepared design. Chain `chain_id` draws from
/// stream `chain_id` of the base seed.
pub fn run_chain_with_design<T: Real>(
    design: &FitDesign<T>,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    chain_id: usize,
) -> Result<ChainOutput<T>> {
    cfg.validate()?;
    prior.validate()?;
    let frame = &design.frame;
    let (n, p, q, k) = (frame.n(), frame.p(), frame.q(), frame.groups.n_groups());
    let sizes = frame.groups.sizes();
    let stream = chain_id as u64;
    let mut rng = RngStream::new(cfg.seed, stream);

    let (mut theta, t0) = initial_state(frame, T::lit(cfg.held.lambda2.unwrap_or(cfg.lambda2_init)));
    let mut t = t0;
    if let Some(s2) = cfg.held.sigma2 {
        theta.sigma2 = T::lit(s2);
    }
    if let Some(t2) = cfg.held.tau2 {
        theta.tau2.fill(T::lit(t2));
    }

    let burn = cfg.burn_in();
    let n_keep = cfg.n_retained();
    let mut out_beta = Array2::zeros((n_keep, p));
    let mut out_beta_ortho = Array2::zeros((n_keep, p));
    let mut out_gamma = Array2::zeros((n_keep, q));
    let mut out_mu = Array1::zeros(n_keep);
    let mut out_sigma2 = Array1::zeros(n_keep);
    let mut out_tau2 = Array2::zeros((n_keep, k));
    let mut out_lambda2 = Array1::zeros(n_keep);
    let mut lambda2_trace = Vec::with_capacity(cfg.n_iter);

    let mut eps_beta = Adapter::new(cfg.hmc_eps_beta, HMC_TARGET_ACCEPT);
    let mut eps_gamma = Adapter::new(cfg.hmc_eps_gamma, HMC_TARGET_ACCEPT);
    let mut sd_sigma = Adapter::new(cfg.mh_sd_logsigma2, MH_TARGET_ACCEPT);
    let mut sd_mu = Adapter::new(cfg.mh_sd_mu, MH_TARGET_ACCEPT);
    let mut tallies = [Tally::default(); 4];

    let mut history: VecDeque<Array1<T>> = VecDeque::new();
    let mut xb = Array1::<T>::zeros(n);
    let mut zg = Array1::<T>::zeros(n);
    let mut kept = 0;

    for it in 0..cfg.n_iter {
        let adapting = cfg.adapt && it < burn;
        let post = it >= burn;

        // 1: augmentation
        let eta = (&xb + &zg).mapv(|v| v + theta.mu);
        steps::augment_with_eta(&eta, theta.sigma(), &mut t, frame, &mut rng).map_err(abort(chain_id, it, "augment"))?;
        debug_assert!((0..n).all(|i| t[i] >= frame.lower[i] && t[i] <= frame.upper[i] && t[i] >= frame.entry[i]));
        let log_t = t.mapv(|v| v.ln());

        // 2: beta
        if p > 0 {
            let target = BetaTarget::new(&theta, &log_t, frame);
            let eps = jittered(eps_beta.step(), &mut rng);
            let res = hmc_update(&mut |b: &Array1<T>| target.eval(b), &theta.beta, T::lit(eps), cfg.hmc_steps, &mut rng)
                .map_err(abort(chain_id, it, "beta"))?;
            if adapting {
                eps_beta.update(res.accept_prob.as_f64(), it);
            }
            if post {
                tallies[0].add(res.accepted);
            }
            if res.accepted {
                theta.beta = res.position;
                xb = frame.x.dot(&theta.beta);
            }
        }

        // 3: gamma
        if q > 0 {
            let target = GammaTarget::new(&theta, &log_t, frame, prior);
            let eps = jittered(eps_gamma.step(), &mut rng);
            let res = hmc_update(&mut |g: &Array1<T>| target.eval(g), &theta.gamma, T::lit(eps), cfg.hmc_steps, &mut rng)
                .map_err(abort(chain_id, it, "gamma"))?;
            if adapting {
                eps_gamma.update(res.accept_prob.as_f64(), it);
            }
            if post {
                tallies[1].add(res.accepted);
            }
            if res.accepted {
                theta.gamma = res.position;
                zg = frame.z.dot(&theta.gamma);
            }
        }

        // 4: sigma2
        let eta = (&xb + &zg).mapv(|v| v + theta.mu);
        if cfg.held.sigma2.is_none() {
            let cur = sigma2_target_cached(theta.sigma2, &eta, &log_t, &theta, frame, prior);
            let res = steps::update_sigma2_cached(&theta, &eta, &log_t, frame, prior, &mut rng, T::lit(sd_sigma.step()), Some(cur))
                .map_err(abort(chain_id, it, "sigma2"))?;
            if adapting {
                sd_sigma.update(res.accept_prob.as_f64(), it);
            }
            if post {
                tallies[2].add(res.accepted);
            }
            theta.sigma2 = res.value;
            check_positive(theta.sigma2, chain_id, it, "sigma2")?;
        }

        // 5: mu
        let res = steps::update_mu_cached(&theta, &eta, &log_t, frame, prior, &mut rng, T::lit(sd_mu.step()))
            .map_err(abort(chain_id, it, "mu"))?;
        if adapting {
            sd_mu.update(res.accept_prob.as_f64(), it);
        }
        if post {
            tallies[3].add(res.accepted);
        }
        theta.mu = res.value;

        // 6: tau2
        if cfg.held.tau2.is_none() && k > 0 {
            theta.tau2 = update_tau2(&theta, &frame.groups, &mut rng).map_err(abort(chain_id, it, "tau2"))?;
            for &v in theta.tau2.iter() {
                check_positive(v, chain_id, it, "tau2")?;
            }
        }

        // 7: lambda2
        if cfg.held.lambda2.is_none() && k > 0 {
            history.push_back(theta.tau2.clone());
            if let Some(w) = cfg.mcem_window {
                while history.len() > w {
                    history.pop_front();
                }
            }
            if (it + 1) % cfg.mcem_interval == 0 {
                let window: Vec<Array1<T>> = history.iter().cloned().collect();
                theta.lambda2 = update_lambda2_mcem(&window, &sizes).map_err(abort(chain_id, it, "lambda2"))?;
                check_positive(theta.lambda2, chain_id, it, "lambda2")?;
                if cfg.mcem_window.is_none() {
                    history.clear();
                }
            }
        }
        lambda2_trace.push(theta.lambda2);

        if post && (it + 1 - burn).is_multiple_of(cfg.thin) && kept < n_keep {
            let (b, g, m) = design.to_original(&theta.beta, &theta.gamma, theta.mu)?;
            out_beta.row_mut(kept).assign(&b);
            out_beta_ortho.row_mut(kept).assign(&theta.beta);
            out_gamma.row_mut(kept).assign(&g);
            out_mu[kept] = m;
            out_sigma2[kept] = theta.sigma2;
            out_tau2.row_mut(kept).assign(&theta.tau2);
            out_lambda2[kept] = theta.lambda2;
            kept += 1;
        }
    }
    debug_assert_eq!(kept, n_keep);

    Ok(ChainOutput {
        chain_id,
        seed: cfg.seed,
        stream,
        beta_names: design.x_names.clone(),
        gamma_names: design.z_names.clone(),
        group_labels: design.group_labels(),
        beta: out_beta,
        beta_ortho: out_beta_ortho,
        gamma: out_gamma,
        mu: out_mu,
        sigma2: out_sigma2,
        tau2: out_tau2,
        lambda2: out_lambda2,
        lambda2_trace,
        acceptance: AcceptanceRates {
            beta: tallies[0].rate(),
            gamma: tallies[1].rate(),
            sigma2: tallies[2].rate(),
            mu: tallies[3].rate(),
        },
        steps: TunedSteps {
            hmc_eps_beta: eps_beta.step(),
            hmc_eps_gamma: eps_gamma.step(),
            mh_sd_logsigma2: sd_sigma.step(),
            mh_sd_mu: sd_mu.step(),
        },
    })
}

fn jittered<R: Rng + ?Sized>(eps: f64, rng: &mut R) -> f64 {
    let u: f64 = uniform_open(rng);
    eps * (1.0 - STEP_JITTER + 2.0 * STEP_JITTER * u)
}

/// Runs a single chain from the raw dataset.
pub fn run_chain<T: Real>(
    d: &SurvivalDataset<T>,
    prior: &PriorConfig,
    cfg: &SamplerConfig,
    kind: PriorKind,
    chain_id: usize,
) -> Result<ChainOutput<T>> {
    let design = FitDesign::new(d, kind)?;
    run_chain_with_design(&design, prior, cfg, chain_id)
}

/// Runs `cfg.n_chains` chains (ids `1..=n_chains`) on a thread pool of
/// `cfg.workers` threads and summarizes convergence. `lambda2` is excluded
/// from the diagnostics.
pub fn run_chains_with_design<T: Real>(design: &FitDesign<T>, prior: &PriorConfig, cfg: &SamplerConfig) -> Result<ChainSet<T>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Other(format!("thread pool: {e}")))?;
    let results: Vec<Result<ChainOutput<T>>> = pool.install(|| {
        use rayon::prelude::*;
        (1..=cfg.n_chains).into_par_iter().map(|c| run_chain_with_design(design, prior, cfg, c)).collect()
    });
    let chains = results.into_iter().collect::<Result<Vec<_>>>()?;
    let convergence = convergence_summary(&chains);
    Ok(ChainSet { chains, convergence })
}

pub fn run_chains<T: Real>(d: &SurvivalDataset<T>, prior: &PriorConfig, cfg: &SamplerConfig, kind: PriorKind) -> Result<ChainSet<T>> {
    let design = FitDesign::new(d, kind)?;
    run_chains_with_design(&design, prior, cfg)
}

/// PSRF and ESS for every sampled column except `lambda2`.
pub fn convergence_summary<T: Real>(chains: &[ChainOutput<T>]) -> ConvergenceSummary {
    let Some(first) = chains.first() else {
        return ConvergenceSummary { n_chains: 0, params: Vec::new() };
    };
    let names = first.column_names();
    let tables: Vec<Array2<f64>> = chains.iter().map(|c| c.table().mapv(|v| v.as_f64())).collect();
    let params = names
        .iter()
        .enumerate()
        .filter(|(_, name)| name.as_str() != "lambda2")
        .map(|(j, name)| {
            let cols: Vec<Vec<f64>> = tables.iter().map(|t| t.column(j).to_vec()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            ParamDiagnostic {
                name: name.clone(),
                psrf: potential_scale_reduction(&refs),
                ess: effective_sample_size(&refs),
            }
        })
        .collect();
    ConvergenceSummary { n_chains: chains.len(), params }
}
