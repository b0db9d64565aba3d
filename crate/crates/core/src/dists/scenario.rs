use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::{std_normal, uniform_open};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Error-term law of the simulation scenarios. Second parameters of the
/// normal components are variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorScenario {
    /// Normal(4, 1)
    LogNormal,
    /// 0.5 Normal(2.8, 0.01) + 0.5 Normal(5.2, 0.01)
    Bimodal,
    /// 0.5 Normal(4, 2) + 0.5 Normal(4, 0.01)
    HeavyTailed,
    /// Skew-normal(location 2.8, scale 1.7, shape 20)
    RightSkewed,
}

impl ErrorScenario {
    pub const ALL: [ErrorScenario; 4] =
        [Self::LogNormal, Self::Bimodal, Self::HeavyTailed, Self::RightSkewed];

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(Self::LogNormal),
            2 => Ok(Self::Bimodal),
            3 => Ok(Self::HeavyTailed),
            4 => Ok(Self::RightSkewed),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario {other}; valid scenario ids are 1, 2, 3, 4"
            ))),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Self::LogNormal => 1,
            Self::Bimodal => 2,
            Self::HeavyTailed => 3,
            Self::RightSkewed => 4,
        }
    }

    pub fn sample<T: Real, R: Rng + ?Sized>(self, rng: &mut R) -> T {
        let normal = |rng: &mut R, mean: f64, var: f64| -> T {
            T::lit(mean) + T::lit(var).sqrt() * std_normal::<T, R>(rng)
        };
        match self {
            Self::LogNormal => normal(rng, 4.0, 1.0),
            Self::Bimodal => {
                let u: T = uniform_open(rng);
                if u < T::lit(0.5) { normal(rng, 2.8, 0.01) } else { normal(rng, 5.2, 0.01) }
            }
            Self::HeavyTailed => {
                let u: T = uniform_open(rng);
                if u < T::lit(0.5) { normal(rng, 4.0, 2.0) } else { normal(rng, 4.0, 0.01) }
            }
            Self::RightSkewed => sample_skew_normal(T::lit(2.8), T::lit(1.7), T::lit(20.0), rng),
        }
    }
}

/// Skew-normal with density `2/omega phi((x-xi)/omega) Phi(alpha (x-xi)/omega)`.
pub fn sample_skew_normal<T: Real, R: Rng + ?Sized>(xi: T, omega: T, alpha: T, rng: &mut R) -> T {
    let delta = alpha / (T::one() + alpha * alpha).sqrt();
    let u0: T = std_normal(rng);
    let u1: T = std_normal(rng);
    let z = delta * u0.abs() + (T::one() - delta * delta).sqrt() * u1;
    xi + omega * z
}

/// Draws one error term for scenario `id` (1 to 4).
pub fn sample_scenario_error<T: Real, R: Rng + ?Sized>(id: u32, rng: &mut R) -> Result<T> {
    Ok(ErrorScenario::from_id(id)?.sample(rng))
}
