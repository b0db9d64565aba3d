//! Hamiltonian Monte Carlo with an identity mass matrix.

use ndarray::Array1;
use rand::Rng;

use crate::dists::{std_normal, uniform_open};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct HmcOutcome<T> {
    pub position: Array1<T>,
    pub accepted: bool,
    /// `min(1, exp(-dH))`
    pub accept_prob: T,
    /// `H(proposal) - H(start)`; `+inf` for a divergent trajectory.
    pub energy_error: T,
}

/// Deterministic part of an HMC transition: `steps` leapfrog steps from
/// `(position, momentum)` followed by a Metropolis test against `log_u`.
#[allow(clippy::too_many_arguments)]
pub fn leapfrog_transition<T, F>(
    target: &mut F,
    position: &Array1<T>,
    start: (T, Array1<T>),
    momentum: Array1<T>,
    eps: T,
    steps: usize,
    log_u: T,
) -> HmcOutcome<T>
where
    T: Real,
    F: FnMut(&Array1<T>) -> (T, Array1<T>),
{
    let (lp0, grad0) = start;
    let half = T::lit(0.5) * eps;
    let h0 = -lp0 + T::lit(0.5) * momentum.dot(&momentum);
    let mut x = position.clone();
    let mut p = momentum;
    p.scaled_add(half, &grad0);
    let mut lp = lp0;
    for l in 0..steps {
        x.scaled_add(eps, &p);
        let (v, g) = target(&x);
        lp = v;
        if !lp.is_finite() || g.iter().any(|gi| !gi.is_finite()) {
            return HmcOutcome {
                position: position.clone(),
                accepted: false,
                accept_prob: T::zero(),
                energy_error: T::infinity(),
            };
        }
        let w = if l + 1 == steps { half } else { eps };
        p.scaled_add(w, &g);
    }
    let h1 = -lp + T::lit(0.5) * p.dot(&p);
    let dh = h1 - h0;
    let accept_prob = if dh <= T::zero() { T::one() } else { (-dh).exp() };
    let accepted = dh.is_finite() && log_u < -dh;
    HmcOutcome {
        position: if accepted { x } else { position.clone() },
        accepted,
        accept_prob: if dh.is_finite() { accept_prob } else { T::zero() },
        energy_error: dh,
    }
}

/// One HMC update: Gaussian momentum, `steps` leapfrog steps of size `eps`,
/// Metropolis correction. The position is unchanged on rejection.
pub fn hmc_update<T, F, R>(target: &mut F, position: &Array1<T>, eps: T, steps: usize, rng: &mut R) -> Result<HmcOutcome<T>>
where
    T: Real,
    F: FnMut(&Array1<T>) -> (T, Array1<T>),
    R: Rng + ?Sized,
{
    if !(eps > T::zero()) || steps == 0 {
        return Err(Error::InvalidParameter(format!("HMC needs eps > 0 and steps >= 1 (got {eps}, {steps})")));
    }
    let start = target(position);
    if !start.0.is_finite() || start.1.iter().any(|g| !g.is_finite()) {
        return Err(Error::Other(format!("non-finite log target ({}) at the current position", start.0)));
    }
    let momentum = Array1::from_shape_fn(position.len(), |_| std_normal(rng));
    let u: T = uniform_open(rng);
    Ok(leapfrog_transition(target, position, start, momentum, eps, steps, u.ln()))
}
