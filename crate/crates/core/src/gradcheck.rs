//! Finite-difference check of the analytic `beta` and `gamma` gradients on
//! randomly generated states with mixed censoring and delayed entry.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::Serialize;

use crate::data::GroupStructure;
use crate::dists::{std_normal, uniform_open, RngStream};
use crate::error::Result;
use crate::likelihood::{AugmentedState, BetaTarget, GammaTarget, ModelFrame, ModelParameters, PriorConfig};
use crate::sampler::augment_event_times;

/// Pass threshold on the maximum relative error.
pub const GRADCHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckConfig {
    pub states: usize,
    pub seed: u64,
    /// negates the analytic gradient; used to confirm the check can fail
    pub flip_sign: bool,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self { states: 100, seed: 1, flip_sign: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub states: usize,
    pub max_rel_error_beta: f64,
    pub max_rel_error_gamma: f64,
    pub passed: bool,
}

/// A random model state: frame, parameters and imputed times.
pub struct RandomState {
    pub frame: ModelFrame<f64>,
    pub theta: ModelParameters<f64>,
    pub aug: AugmentedState<f64>,
}

/// `n <= 50`, `p <= 12`, rows cycling through exact, interval and right
/// censored, and delayed entry on every other row.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> Result<RandomState> {
    let n = 10 + (uniform_open::<f64, _>(rng) * 41.0) as usize;
    let p = 1 + (uniform_open::<f64, _>(rng) * 12.0) as usize;
    let q = (uniform_open::<f64, _>(rng) * 4.0) as usize;
    let x = Array2::from_shape_fn((n, p), |_| std_normal::<f64, _>(rng));
    let z = Array2::from_shape_fn((n, q), |_| std_normal::<f64, _>(rng));
    let mut sizes = Vec::new();
    let mut left = p;
    while left > 0 {
        let s = (1 + (uniform_open::<f64, _>(rng) * 4.0) as usize).min(left);
        sizes.push(s);
        left -= s;
    }
    let groups = GroupStructure::contiguous(&sizes)?;
    let k = groups.n_groups();
    let mut theta = ModelParameters::zeros(p, q, k);
    theta.beta = Array1::from_shape_fn(p, |_| 0.5 * std_normal::<f64, _>(rng));
    theta.gamma = Array1::from_shape_fn(q, |_| 0.5 * std_normal::<f64, _>(rng));
    theta.mu = 1.0 + 0.5 * std_normal::<f64, _>(rng);
    theta.sigma2 = 0.3 + 1.5 * uniform_open::<f64, _>(rng);
    theta.tau2 = Array1::from_shape_fn(k, |_| 0.2 + 2.8 * uniform_open::<f64, _>(rng));
    theta.lambda2 = 1.0;

    let mut entry = Array1::zeros(n);
    let mut lower = Array1::zeros(n);
    let mut upper = Array1::zeros(n);
    for i in 0..n {
        let c0 = if i % 2 == 0 { 0.2 + 1.5 * uniform_open::<f64, _>(rng) } else { 0.0 };
        let t = c0 + (0.5 + std_normal::<f64, _>(rng)).exp();
        entry[i] = c0;
        match i % 3 {
            0 => {
                lower[i] = t;
                upper[i] = t;
            }
            1 => {
                lower[i] = (0.7 * t).max(c0).max(1e-3);
                upper[i] = 1.4 * t;
            }
            _ => {
                lower[i] = t;
                upper[i] = f64::INFINITY;
            }
        }
    }
    let frame = ModelFrame::new(x, z, entry, lower.clone(), upper, groups);
    let start = AugmentedState { t: lower };
    let aug = augment_event_times(&theta, &start, &frame, rng)?;
    Ok(RandomState { frame, theta, aug })
}

/// `|a - b| / max(1, |a|, |b|)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

type Target<'a> = dyn Fn(&Array1<f64>) -> (f64, Array1<f64>) + 'a;

fn max_fd_error(f: &Target<'_>, at: &Array1<f64>, flip: bool) -> f64 {
    let (_, g) = f(at);
    let mut worst: f64 = 0.0;
    for j in 0..at.len() {
        let h = 1e-5 * at[j].abs().max(1.0);
        let mut up = at.clone();
        let mut dn = at.clone();
        up[j] += h;
        dn[j] -= h;
        let fd = (f(&up).0 - f(&dn).0) / (2.0 * h);
        let analytic = if flip { -g[j] } else { g[j] };
        worst = worst.max(relative_error(analytic, fd));
    }
    worst
}

pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let mut rng = RngStream::new(cfg.seed, 0);
    let prior = PriorConfig { v2: 4.0, ..PriorConfig::default() };
    let (mut eb, mut eg) = (0.0f64, 0.0f64);
    for _ in 0..cfg.states {
        let s = random_state(&mut rng)?;
        let log_t = s.aug.log_t();
        let bt = BetaTarget::new(&s.theta, &log_t, &s.frame);
        eb = eb.max(max_fd_error(&|b| bt.eval(b), &s.theta.beta, cfg.flip_sign));
        if s.frame.q() > 0 {
            let gt = GammaTarget::new(&s.theta, &log_t, &s.frame, &prior);
            eg = eg.max(max_fd_error(&|g| gt.eval(g), &s.theta.gamma, cfg.flip_sign));
        }
    }
    Ok(GradcheckReport {
        states: cfg.states,
        max_rel_error_beta: eb,
        max_rel_error_gamma: eg,
        passed: eb < GRADCHECK_TOL && eg < GRADCHECK_TOL,
    })
}
