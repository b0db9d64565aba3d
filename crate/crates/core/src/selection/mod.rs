//! Posterior summaries and SNC-BIC variable selection: rank covariates by
//! their scaled neighborhood criterion, enumerate the supports obtained by
//! thresholding it, refit each support's posterior-median predictor by
//! maximum likelihood and pick the support with the best penalized fit.

pub mod optim;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::SurvivalDataset;
use crate::dists::special::{inv_mills, log_diff_cdf, norm_log_cdf, norm_log_pdf};
use crate::error::{Error, Result};
use crate::sampler::ChainOutput;
use crate::scalar::Real;
use optim::{minimize_bfgs, BfgsOptions};

/// Default number of thresholds in the candidate grid.
pub const DEFAULT_GRID_SIZE: usize = 1000;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

fn sample_sd(v: ArrayView1<f64>) -> f64 {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Fraction of draws whose magnitude exceeds the sample standard deviation
/// of the draws. Constant draws give 0.
pub fn compute_snc(draws: ArrayView1<f64>) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::InvalidParameter(format!("SNC needs at least 2 draws, got {}", draws.len())));
    }
    let sd = sample_sd(draws);
    if !(sd > 0.0) {
        return Ok(0.0);
    }
    Ok(draws.iter().filter(|b| b.abs() > sd).count() as f64 / draws.len() as f64)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefSummary {
    pub name: String,
    pub median: f64,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub snc: f64,
}

impl CoefSummary {
    pub fn from_draws(name: &str, draws: ArrayView1<f64>) -> Result<Self> {
        let snc = compute_snc(draws)?;
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            name: name.to_string(),
            median: quantile_sorted(&sorted, 0.5),
            mean: draws.sum() / draws.len() as f64,
            sd: sample_sd(draws),
            q025: quantile_sorted(&sorted, 0.025),
            q975: quantile_sorted(&sorted, 0.975),
            snc,
        })
    }
}

/// Marginal summaries of covariate-scale `beta` and `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub beta: Vec<CoefSummary>,
    pub gamma: Vec<CoefSummary>,
}

impl PosteriorSummary {
    pub fn from_draws(beta: ArrayView2<f64>, gamma: ArrayView2<f64>, beta_names: &[String], gamma_names: &[String]) -> Result<Self> {
        if beta_names.len() != beta.ncols() {
            return Err(Error::Dimension { expected: beta.ncols(), actual: beta_names.len() });
        }
        if gamma_names.len() != gamma.ncols() {
            return Err(Error::Dimension { expected: gamma.ncols(), actual: gamma_names.len() });
        }
        let summarize = |m: ArrayView2<f64>, names: &[String]| -> Result<Vec<CoefSummary>> {
            m.axis_iter(Axis(1)).zip(names).map(|(c, n)| CoefSummary::from_draws(n, c)).collect()
        };
        Ok(Self { beta: summarize(beta, beta_names)?, gamma: summarize(gamma, gamma_names)? })
    }

    /// Pools the retained draws of every chain.
    pub fn from_chains<T: Real>(chains: &[ChainOutput<T>]) -> Result<Self> {
        let first = chains.first().ok_or_else(|| Error::InvalidParameter("no chains to summarize".into()))?;
        let stack = |f: &dyn Fn(&ChainOutput<T>) -> &Array2<T>| -> Result<Array2<f64>> {
            let views: Vec<_> = chains.iter().map(|c| f(c).view()).collect();
            Ok(ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Other(e.to_string()))?.mapv(|v| v.as_f64()))
        };
        let beta = stack(&|c| &c.beta)?;
        let gamma = stack(&|c| &c.gamma)?;
        Self::from_draws(beta.view(), gamma.view(), &first.beta_names, &first.gamma_names)
    }

    pub fn snc(&self) -> Vec<f64> {
        self.beta.iter().map(|c| c.snc).collect()
    }

    pub fn beta_medians(&self) -> Vec<f64> {
        self.beta.iter().map(|c| c.median).collect()
    }

    pub fn gamma_medians(&self) -> Vec<f64> {
        self.gamma.iter().map(|c| c.median).collect()
    }
}

/// A support produced by the thresholds `kappa_min ..= kappa_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSupport {
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// 0-based coefficient indices, increasing
    pub support: Vec<usize>,
}

/// Supports `{j : snc_j > m / M}` for `m = 1..=M` with consecutive
/// duplicates collapsed. The last entry is always the empty support.
pub fn candidate_grid(snc: &[f64], grid_size: usize) -> Result<Vec<CandidateSupport>> {
    if grid_size == 0 {
        return Err(Error::InvalidParameter("grid size must be at least 1".into()));
    }
    let mut out: Vec<CandidateSupport> = Vec::new();
    for m in 1..=grid_size {
        let kappa = m as f64 / grid_size as f64;
        let support: Vec<usize> = (0..snc.len()).filter(|&j| snc[j] > kappa).collect();
        match out.last_mut() {
            Some(last) if last.support == support => last.kappa_max = kappa,
            _ => out.push(CandidateSupport { kappa_min: kappa, kappa_max: kappa, support }),
        }
    }
    Ok(out)
}

/// Maximum-likelihood fit of `log T ~ Normal(a + b w, s^2)` to the
/// interval-censored, left-truncated observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefitResult {
    pub intercept: f64,
    pub slope: f64,
    pub scale: f64,
    pub loglik: f64,
    pub grad_norm: f64,
}

enum Obs {
    Exact(f64),
    Interval(f64, f64),
}

struct RefitData {
    obs: Vec<Obs>,
    log_entry: Vec<Option<f64>>,
    w: Vec<f64>,
}

impl RefitData {
    /// Negative log-likelihood and its gradient in `(a, b, log s)`.
    fn nll(&self, a: f64, b: f64, ls: f64, fit_slope: bool) -> (f64, Vec<f64>) {
        let s = ls.exp();
        let (mut ll, mut ga, mut gb, mut gs) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..self.obs.len() {
            let eta = a + b * self.w[i];
            let (mut de, mut ds);
            match self.obs[i] {
                Obs::Exact(lt) => {
                    let z = (lt - eta) / s;
                    ll += -0.5 * z * z - ls - lt - HALF_LN_2PI;
                    de = z / s;
                    ds = z * z - 1.0;
                }
                Obs::Interval(lo, hi) => {
                    let zl = (lo - eta) / s;
                    let zu = (hi - eta) / s;
                    let lp = log_diff_cdf(zl, zu);
                    ll += lp;
                    let rl = (norm_log_pdf(zl) - lp).exp();
                    let (ru, zru) = if zu.is_finite() {
                        let r = (norm_log_pdf(zu) - lp).exp();
                        (r, r * zu)
                    } else {
                        (0.0, 0.0)
                    };
                    de = (rl - ru) / s;
                    ds = rl * zl - zru;
                }
            }
            if let Some(lc) = self.log_entry[i] {
                let v = (eta - lc) / s;
                ll -= norm_log_cdf(v);
                let m = inv_mills(v);
                de -= m / s;
                ds += m * v;
            }
            ga += de;
            gb += de * self.w[i];
            gs += ds;
        }
        let grad = if fit_slope { vec![-ga, -gb, -gs] } else { vec![-ga, -gs] };
        (-ll, grad)
    }
}

/// Fits intercept, slope on `w` and log-scale by BFGS from three starting
/// points and keeps the best optimum. A constant `w` fixes the slope at 0.
pub fn refit_univariable_aft<T: Real>(w: &Array1<T>, d: &SurvivalDataset<T>) -> Result<RefitResult> {
    let n = d.n();
    if w.len() != n {
        return Err(Error::Dimension { expected: n, actual: w.len() });
    }
    let w: Vec<f64> = w.iter().map(|v| v.as_f64()).collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("refit predictor has non-finite entries".into()));
    }
    let w_mean = w.iter().sum::<f64>() / n as f64;
    let wc: Vec<f64> = w.iter().map(|v| v - w_mean).collect();
    let w_sd = (wc.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let fit_slope = w_sd > 1e-12 * (1.0 + w_mean.abs());

    let mut obs = Vec::with_capacity(n);
    let mut mids = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (d.lower()[i].as_f64(), d.upper()[i].as_f64());
        if lo == hi {
            obs.push(Obs::Exact(lo.ln()));
            mids.push(lo.ln());
        } else {
            obs.push(Obs::Interval(lo.ln(), hi.ln()));
            mids.push(((lo + hi.min(3.0 * lo)) / 2.0).ln());
        }
    }
    let log_entry = d.entry().iter().map(|&c| if c > T::zero() { Some(c.as_f64().ln()) } else { None }).collect();
    let data = RefitData { obs, log_entry, w: wc };

    let a0 = mids.iter().sum::<f64>() / n as f64;
    let v0 = mids.iter().map(|m| (m - a0).powi(2)).sum::<f64>() / n as f64;
    let ls0 = if v0 > 1e-12 { 0.5 * v0.ln() } else { 0.0 };
    let starts: [[f64; 3]; 3] = [[a0, 0.0, ls0], [a0, 1.0, ls0], [a0 - 0.5, 0.5, ls0 + 0.5]];

    let opts = BfgsOptions::default();
    let mut best: Option<RefitResult> = None;
    let mut last_err = None;
    for st in starts.iter() {
        let res = if fit_slope {
            minimize_bfgs(|x| data.nll(x[0], x[1], x[2], true), st, &opts).map(|m| (m.x[0], m.x[1], m.x[2], m.value, m.grad_norm))
        } else {
            minimize_bfgs(|x| data.nll(x[0], 0.0, x[1], false), &[st[0], st[2]], &opts)
                .map(|m| (m.x[0], 0.0, m.x[1], m.value, m.grad_norm))
        };
        match res {
            Ok((a, b, ls, nll, gn)) => {
                let cand = RefitResult { intercept: a - b * w_mean, slope: b, scale: ls.exp(), loglik: -nll, grad_norm: gn };
                if best.is_none_or(|bst| cand.loglik > bst.loglik) {
                    best = Some(cand);
                }
            }
            Err(e) => last_err = Some(e),
        }
        if !fit_slope && best.is_some() {
            break;
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Other("refit produced no optimum".into())))
}

/// Log-likelihood of the refit model at given `(a, b, s)`.
pub fn refit_loglik<T: Real>(w: &Array1<T>, d: &SurvivalDataset<T>, a: f64, b: f64, s: f64) -> f64 {
    let n = d.n();
    let obs = (0..n)
        .map(|i| {
            let (lo, hi) = (d.lower()[i].as_f64(), d.upper()[i].as_f64());
            if lo == hi {
                Obs::Exact(lo.ln())
            } else {
                Obs::Interval(lo.ln(), hi.ln())
            }
        })
        .collect();
    let log_entry = d.entry().iter().map(|&c| if c > T::zero() { Some(c.as_f64().ln()) } else { None }).collect();
    let data = RefitData { obs, log_entry, w: w.iter().map(|v| v.as_f64()).collect() };
    -data.nll(a, b, s.ln(), true).0
}

/// `L - p log n`; larger is better.
pub fn selection_criterion(loglik: f64, p: usize, n: usize) -> f64 {
    loglik - p as f64 * (n as f64).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateModel {
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub support: Vec<usize>,
    pub size: usize,
    pub loglik: f64,
    pub criterion: f64,
    pub refit: RefitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedCandidate {
    pub support: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub grid_size: usize,
    pub n: usize,
    pub candidates: Vec<CandidateModel>,
    pub dropped: Vec<DroppedCandidate>,
    /// index into `candidates`
    pub winner: usize,
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    /// posterior medians on the selected support, 0 elsewhere
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub snc: Vec<f64>,
}

impl SelectionResult {
    pub fn winning(&self) -> &CandidateModel {
        &self.candidates[self.winner]
    }
}

/// Index of the largest criterion, ties going to the smaller support.
pub fn best_candidate(scores: &[(f64, usize)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &(c, p)) in scores.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let (cb, pb) = scores[b];
                if c > cb || (c == cb && p < pb) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Refit predictor `z' gamma + sum_{j in S} x_j beta_j` from point estimates.
pub fn support_predictor<T: Real>(d: &SurvivalDataset<T>, support: &[usize], beta: &[f64], gamma: &[f64]) -> Array1<f64> {
    let mut w = Array1::zeros(d.n());
    for &j in support {
        w.scaled_add(beta[j], &d.x().column(j).mapv(|v| v.as_f64()));
    }
    for (k, &g) in gamma.iter().enumerate() {
        w.scaled_add(g, &d.z().column(k).mapv(|v| v.as_f64()));
    }
    w
}

/// Runs the full thresholding procedure on a posterior summary of `d`.
pub fn snc_bic_select<T: Real>(summary: &PosteriorSummary, d: &SurvivalDataset<T>, grid_size: usize) -> Result<SelectionResult> {
    if summary.beta.len() != d.p() {
        return Err(Error::Dimension { expected: d.p(), actual: summary.beta.len() });
    }
    if summary.gamma.len() != d.q() {
        return Err(Error::Dimension { expected: d.q(), actual: summary.gamma.len() });
    }
    let snc = summary.snc();
    let beta_med = summary.beta_medians();
    let gamma_med = summary.gamma_medians();
    let grid = candidate_grid(&snc, grid_size)?;
    let n = d.n();
    let d64 = to_f64_dataset(d);
    let fits: Vec<(CandidateSupport, Result<RefitResult>)> = grid
        .into_par_iter()
        .map(|c| {
            let w = support_predictor(d, &c.support, &beta_med, &gamma_med);
            let r = refit_univariable_aft(&w, &d64);
            (c, r)
        })
        .collect();
    let mut candidates = Vec::new();
    let mut dropped = Vec::new();
    for (c, r) in fits {
        match r {
            Ok(fit) => candidates.push(CandidateModel {
                kappa_min: c.kappa_min,
                kappa_max: c.kappa_max,
                size: c.support.len(),
                criterion: selection_criterion(fit.loglik, c.support.len(), n),
                loglik: fit.loglik,
                support: c.support,
                refit: fit,
            }),
            Err(e) => {
                log::warn!("dropping candidate support {:?}: {e}", c.support);
                dropped.push(DroppedCandidate { support: c.support, reason: e.to_string() });
            }
        }
    }
    let scores: Vec<(f64, usize)> = candidates.iter().map(|c| (c.criterion, c.size)).collect();
    let winner = best_candidate(&scores).ok_or_else(|| Error::Other("every candidate refit failed".into()))?;
    let selected = candidates[winner].support.clone();
    let mut beta = vec![0.0; d.p()];
    for &j in &selected {
        beta[j] = beta_med[j];
    }
    Ok(SelectionResult {
        grid_size,
        n,
        selected_names: selected.iter().map(|&j| summary.beta[j].name.clone()).collect(),
        selected,
        candidates,
        dropped,
        winner,
        beta,
        gamma: gamma_med,
        snc,
    })
}

fn to_f64_dataset<T: Real>(d: &SurvivalDataset<T>) -> SurvivalDataset<f64> {
    let f = |a: &Array1<T>| a.mapv(|v| v.as_f64());
    SurvivalDataset::new_unchecked(
        f(d.entry()),
        f(d.lower()),
        f(d.upper()),
        d.x().mapv(|v| v.as_f64()),
        d.z().mapv(|v| v.as_f64()),
        d.groups().clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionMetrics {
    pub tpr: f64,
    pub fpr: f64,
    pub ppv: f64,
    pub npv: f64,
    /// nothing was selected; `ppv` is then reported as 1
    pub empty_selection: bool,
}

/// True/false positive rates and predictive values of a selected set against
/// the truly nonzero set, both 0-based indices below `p`.
pub fn selection_metrics(selected: &[usize], truth: &[usize], p: usize) -> Result<SelectionMetrics> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("the true support is empty".into()));
    }
    if let Some(&j) = selected.iter().chain(truth).find(|&&j| j >= p) {
        return Err(Error::InvalidParameter(format!("index {j} out of range for p = {p}")));
    }
    let mut sel = vec![false; p];
    let mut tru = vec![false; p];
    selected.iter().for_each(|&j| sel[j] = true);
    truth.iter().for_each(|&j| tru[j] = true);
    let count = |f: &dyn Fn(usize) -> bool| (0..p).filter(|&j| f(j)).count() as f64;
    let tp = count(&|j| sel[j] && tru[j]);
    let fp = count(&|j| sel[j] && !tru[j]);
    let tn = count(&|j| !sel[j] && !tru[j]);
    let n_sel = count(&|j| sel[j]);
    let n_true = count(&|j| tru[j]);
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 1.0 };
    Ok(SelectionMetrics {
        tpr: tp / n_true,
        fpr: if p as f64 > n_true { fp / (p as f64 - n_true) } else { 0.0 },
        ppv: ratio(tp, n_sel),
        npv: ratio(tn, p as f64 - n_sel),
        empty_selection: n_sel == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GroupStructure;
    use crate::dists::{std_normal, RngStream};
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn snc_edge_cases() {
        assert_eq!(compute_snc(Array1::zeros(10).view()).unwrap(), 0.0);
        assert!(compute_snc(array![1.0].view()).is_err());
        let mut rng = RngStream::new(1, 0);
        let d = Array1::from_shape_fn(1000, |_| 10.0 + 0.1 * std_normal::<f64, _>(&mut rng));
        assert_eq!(compute_snc(d.view()).unwrap(), 1.0);
    }

    #[test]
    fn snc_standard_normal_tail() {
        let mut rng = RngStream::new(2, 0);
        let d = Array1::from_shape_fn(1_000_000, |_| std_normal::<f64, _>(&mut rng));
        // 2 (1 - Phi(1))
        assert!((compute_snc(d.view()).unwrap() - 0.317_310_507_862_914).abs() < 0.005);
    }

    #[test]
    fn grid_enumeration() {
        let g = candidate_grid(&[0.9, 0.4], 10).unwrap();
        let sup: Vec<Vec<usize>> = g.iter().map(|c| c.support.clone()).collect();
        assert_eq!(sup, vec![vec![0, 1], vec![0], vec![]]);
        assert_relative_eq!(g[1].kappa_min, 0.4);
        assert_relative_eq!(g[1].kappa_max, 0.8);
        let zero = candidate_grid(&[0.0, 0.0, 0.0], DEFAULT_GRID_SIZE).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(zero[0].support.is_empty());
        assert!(candidate_grid(&[0.5], 0).is_err());
    }

    #[test]
    fn criterion_arithmetic_and_ties() {
        let a = selection_criterion(-100.0, 2, 500);
        assert_relative_eq!(a, -100.0 - 2.0 * 500f64.ln());
        assert!((a - (-112.43)).abs() < 0.01);
        let b = selection_criterion(-120.0, 0, 500);
        assert_eq!(best_candidate(&[(b, 0), (a, 2)]), Some(1));
        assert_eq!(best_candidate(&[(-5.0, 3), (-5.0, 1), (-5.0, 2)]), Some(1));
        assert_eq!(best_candidate(&[(-5.0, 3)]), Some(0));
        assert_eq!(best_candidate(&[]), None);
    }

    #[test]
    fn metrics_counts() {
        let m = selection_metrics(&[0], &[0, 1], 4).unwrap();
        assert_eq!((m.tpr, m.fpr, m.ppv), (0.5, 0.0, 1.0));
        assert_relative_eq!(m.npv, 2.0 / 3.0);
        let all = selection_metrics(&[1, 2], &[1, 2], 5).unwrap();
        assert_eq!((all.tpr, all.fpr, all.ppv, all.npv), (1.0, 0.0, 1.0, 1.0));
        let comp = selection_metrics(&[0, 3], &[1, 2], 4).unwrap();
        assert_eq!((comp.tpr, comp.ppv), (0.0, 0.0));
        let empty = selection_metrics(&[], &[1], 3).unwrap();
        assert!(empty.empty_selection && empty.ppv == 1.0);
        assert!(selection_metrics(&[0], &[], 3).is_err());
    }

    fn exact_data(n: usize, seed: u64) -> (SurvivalDataset<f64>, Array1<f64>) {
        let mut rng = RngStream::new(seed, 0);
        let w = Array1::from_shape_fn(n, |_| std_normal::<f64, _>(&mut rng));
        let t = Array1::from_shape_fn(n, |i| (1.0 + w[i] + 0.7 * std_normal::<f64, _>(&mut rng)).exp());
        let d = SurvivalDataset::new(
            Array1::zeros(n),
            t.clone(),
            t,
            Array2::zeros((n, 0)),
            Array2::zeros((n, 0)),
            GroupStructure::singletons(0),
        )
        .unwrap();
        (d, w)
    }

    #[test]
    fn refit_matches_closed_form_on_exact_data() {
        let (d, _) = exact_data(300, 3);
        let lt = d.lower().mapv(f64::ln);
        let mean = lt.mean().unwrap();
        let var = lt.mapv(|v| (v - mean).powi(2)).mean().unwrap();
        let n = lt.len() as f64;
        let closed = -0.5 * n * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * n - lt.sum();
        let fit = refit_univariable_aft(&Array1::zeros(300), &d).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_relative_eq!(fit.loglik, closed, epsilon = 1e-6);
        assert_relative_eq!(fit.intercept, mean, epsilon = 1e-6);
    }

    #[test]
    fn refit_recovers_slope_and_beats_truth() {
        let (d, w) = exact_data(500, 4);
        let fit = refit_univariable_aft(&w, &d).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.2);
        assert!(fit.loglik >= refit_loglik(&w, &d, 1.0, 1.0, 0.7));
    }

    #[test]
    fn refit_gradient_matches_finite_differences() {
        let data = RefitData {
            obs: vec![Obs::Exact(0.3), Obs::Interval(0.1, 0.9), Obs::Interval(-0.2, f64::INFINITY), Obs::Interval(2.0, 2.5)],
            log_entry: vec![None, Some(-0.5), Some(-1.0), None],
            w: vec![0.5, -1.0, 2.0, 0.1],
        };
        let x = [0.2, 0.7, -0.3];
        let (_, g) = data.nll(x[0], x[1], x[2], true);
        for k in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (data.nll(xp[0], xp[1], xp[2], true).0 - data.nll(xm[0], xm[1], xm[2], true).0) / (2.0 * h);
            assert_relative_eq!(g[k], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn summary_quantiles_ordered() {
        let mut rng = RngStream::new(5, 0);
        let b = Array2::from_shape_fn((500, 2), |_| std_normal::<f64, _>(&mut rng));
        let s = PosteriorSummary::from_draws(b.view(), Array2::zeros((500, 0)).view(), &["a".into(), "b".into()], &[]).unwrap();
        for c in &s.beta {
            assert!(c.q025 <= c.median && c.median <= c.q975);
            assert!((0.0..=1.0).contains(&c.snc));
        }
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    }
}
