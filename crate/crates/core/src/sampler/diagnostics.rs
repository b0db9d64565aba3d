//! Convergence diagnostics on retained draws: the potential scale
//! reduction factor across chains and the multi-chain effective sample
//! size (Geyer's initial monotone sequence estimator).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Gelman-Rubin potential scale reduction factor. `None` with fewer than
/// two chains, fewer than two draws per chain, or zero within-chain
/// variance.
pub fn potential_scale_reduction(chains: &[&[f64]]) -> Option<f64> {
    let m = chains.len();
    let n = chains.iter().map(|c| c.len()).min()?;
    if m < 2 || n < 2 {
        return None;
    }
    let trimmed: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let means: Vec<f64> = trimmed.iter().map(|c| mean(c)).collect();
    let w = trimmed.iter().map(|c| sample_var(c)).sum::<f64>() / m as f64;
    if !(w > 0.0) {
        return None;
    }
    let nf = n as f64;
    let b_over_n = sample_var(&means);
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    Some((var_plus / w).sqrt())
}

/// Biased autocovariances (divisor `n`) at every lag, via FFT.
fn autocovariance(x: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let len = (2 * n).next_power_of_two();
    let m = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf[..n].iter().map(|c| c.re / (len as f64 * n as f64)).collect()
}

/// Effective sample size pooled over chains. Returns `NaN` for constant
/// draws.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let Some(n) = chains.iter().map(|c| c.len()).min() else { return f64::NAN };
    if n < 4 {
        return f64::NAN;
    }
    let mut planner = FftPlanner::new();
    let trimmed: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let acov: Vec<Vec<f64>> = trimmed.iter().map(|c| autocovariance(c, &mut planner)).collect();
    let nf = n as f64;
    let means: Vec<f64> = trimmed.iter().map(|c| mean(c)).collect();
    let w = acov.iter().map(|a| a[0] * nf / (nf - 1.0)).sum::<f64>() / m as f64;
    let b_over_n = if m > 1 { sample_var(&means) } else { 0.0 };
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if !(var_plus > 0.0) {
        return f64::NAN;
    }
    let rho = |t: usize| -> f64 {
        let avg = acov.iter().map(|a| a[t]).sum::<f64>() / m as f64;
        1.0 - (w - avg) / var_plus
    };
    // Geyer: sum consecutive pairs while positive, forced non-increasing
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = rho(t) + rho(t + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        t += 2;
    }
    let total = (m * n) as f64;
    let tau = tau.max(1.0 / total.log10());
    total / tau
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub psrf: Option<f64>,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceSummary {
    pub n_chains: usize,
    pub params: Vec<ParamDiagnostic>,
}

impl ConvergenceSummary {
    /// Largest PSRF over parameters where it is defined.
    pub fn max_psrf(&self) -> Option<f64> {
        self.params.iter().filter_map(|p| p.psrf).fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn min_ess(&self) -> f64 {
        self.params.iter().map(|p| p.ess).filter(|e| e.is_finite()).fold(f64::INFINITY, f64::min)
    }
}
