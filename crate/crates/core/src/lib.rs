//! Bayesian log-normal accelerated failure time regression with group
//! lasso shrinkage for left-truncated, interval-censored event times.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line
//! tool and the simulation harness use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod design;
pub mod dists;
pub mod error;
pub mod gradcheck;
pub mod likelihood;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Dataset = data::SurvivalDataset<f64>;
pub type Basis = data::OrthonormalBasis<f64>;
pub type Params = likelihood::ModelParameters<f64>;
pub type Augmented = likelihood::AugmentedState<f64>;
pub type Frame = likelihood::ModelFrame<f64>;
pub type Design = design::FitDesign<f64>;
pub type Chain = sampler::ChainOutput<f64>;
pub type Chains = sampler::ChainSet<f64>;
