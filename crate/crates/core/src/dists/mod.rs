//! Special functions and random variate generators.

mod invgauss;
mod lognormal;
mod rng;
mod scenario;
pub mod special;

pub use invgauss::sample_inverse_gaussian;
pub(crate) use lognormal::truncation_score;
pub use lognormal::{
    lognormal_logpdf, lognormal_logsurv, sample_truncated_lognormal, sample_truncated_std_normal,
    truncated_lognormal_cdf, LogNormalParams,
};
pub use rng::{std_normal, uniform_open, RngStream};
pub use scenario::{sample_scenario_error, sample_skew_normal, ErrorScenario};
pub use special::{std_normal_pdf_cdf, NormalTriple};
