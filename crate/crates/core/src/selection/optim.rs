//! Small dense BFGS minimizer with a backtracking Armijo line search.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// converged when the largest gradient component falls below this
    pub grad_tol: f64,
    /// gradient norm accepted as converged when progress stalls
    pub stall_grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-9, stall_grad_tol: 1e-4 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

fn norm_inf(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and gradient.
pub fn minimize_bfgs<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence { grad_norm: f64::NAN, iterate: x });
    }
    let mut h = identity(n);
    for iter in 0..opts.max_iter {
        let gn = norm_inf(&g);
        if gn <= opts.grad_tol {
            return Ok(Minimum { x, value: fx, grad_norm: gn, iterations: iter });
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i], &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            h = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + 1e-4 * step * slope {
                break Some((trial, ft, gt));
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some((xn, fn_, gn_new)) = accepted else {
            if gn <= opts.stall_grad_tol {
                return Ok(Minimum { x, value: fx, grad_norm: gn, iterations: iter });
            }
            return Err(Error::NoConvergence { grad_norm: gn, iterate: x });
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let stalled = (fx - fn_).abs() <= 1e-15 * fx.abs().max(1.0);
        x = xn;
        fx = fn_;
        g = gn_new;
        if stalled && norm_inf(&g) <= opts.stall_grad_tol {
            return Ok(Minimum { x, value: fx, grad_norm: norm_inf(&g), iterations: iter + 1 });
        }
    }
    let gn = norm_inf(&g);
    if gn <= opts.stall_grad_tol {
        Ok(Minimum { x, value: fx, grad_norm: gn, iterations: opts.max_iter })
    } else {
        Err(Error::NoConvergence { grad_norm: gn, iterate: x })
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}
