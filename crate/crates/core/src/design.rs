//! Maps a dataset onto the working scale used by the sampler (group
//! orthonormalized `X`, standardized `Z`) and maps draws back.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::{group_orthonormalize, standardize_columns, GroupStructure, OrthonormalBasis, Standardization, SurvivalDataset};
use crate::error::{Error, Result};
use crate::likelihood::ModelFrame;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    /// groups as given by the dataset
    #[default]
    GroupLasso,
    /// every covariate in its own group
    OrdinaryLasso,
}

impl PriorKind {
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::GroupLasso => "group",
            PriorKind::OrdinaryLasso => "ordinary",
        }
    }
}

impl std::str::FromStr for PriorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "group" | "group-lasso" => Ok(PriorKind::GroupLasso),
            "ordinary" | "ordinary-lasso" => Ok(PriorKind::OrdinaryLasso),
            other => Err(Error::InvalidParameter(format!("unknown prior `{other}` (expected group or ordinary)"))),
        }
    }
}

/// Working-scale design together with the transforms needed to report
/// coefficients on the original covariate scale.
#[derive(Debug, Clone)]
pub struct FitDesign<T> {
    pub frame: ModelFrame<T>,
    pub basis: OrthonormalBasis<T>,
    pub z_scale: Standardization<T>,
    pub x_names: Vec<String>,
    pub z_names: Vec<String>,
    pub kind: PriorKind,
}

impl<T: Real> FitDesign<T> {
    pub fn new(d: &SurvivalDataset<T>, kind: PriorKind) -> Result<Self> {
        let groups = match kind {
            PriorKind::GroupLasso => d.groups().clone(),
            PriorKind::OrdinaryLasso => GroupStructure::singletons(d.p()),
        };
        let basis = group_orthonormalize(d.x(), &groups)?;
        let (z, z_scale) = standardize_columns(d.z())?;
        let frame = ModelFrame::new(basis.q.clone(), z, d.entry().clone(), d.lower().clone(), d.upper().clone(), groups);
        Ok(Self { frame, basis, z_scale, x_names: d.x_names().to_vec(), z_names: d.z_names().to_vec(), kind })
    }

    pub fn groups(&self) -> &GroupStructure {
        &self.frame.groups
    }

    /// Converts working-scale `(beta, gamma, mu)` to the covariate scale.
    pub fn to_original(&self, beta_ortho: &Array1<T>, gamma_std: &Array1<T>, mu: T) -> Result<(Array1<T>, Array1<T>, T)> {
        let beta = crate::data::back_transform(beta_ortho, &self.basis)?;
        let gamma = gamma_std / &self.z_scale.sds;
        let mu = mu - self.basis.centers.dot(&beta) - self.z_scale.means.dot(&gamma);
        Ok((beta, gamma, mu))
    }

    /// Group labels used in parameter names (`tau2_<label>`).
    pub fn group_labels(&self) -> Vec<String> {
        match self.kind {
            PriorKind::GroupLasso => self.groups().labels().to_vec(),
            PriorKind::OrdinaryLasso => self.x_names.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::{std_normal, RngStream};
    use crate::likelihood::{linear_predictor, ModelParameters};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn linear_predictor_preserved_on_original_scale() {
        let mut rng = RngStream::new(3, 0);
        let n = 40;
        let x = Array2::from_shape_fn((n, 5), |_| std_normal::<f64, _>(&mut rng));
        let z = Array2::from_shape_fn((n, 2), |_| 3.0 + std_normal::<f64, _>(&mut rng));
        let d = SurvivalDataset::new(
            Array1::zeros(n),
            Array1::ones(n),
            Array1::ones(n),
            x.clone(),
            z.clone(),
            GroupStructure::from_labels(&["a", "a", "b", "b", "b"]),
        )
        .unwrap();
        let design = FitDesign::new(&d, PriorKind::GroupLasso).unwrap();
        let mut theta = ModelParameters::zeros(5, 2, 2);
        theta.beta = Array1::from_shape_fn(5, |_| std_normal(&mut rng));
        theta.gamma = Array1::from_shape_fn(2, |_| std_normal(&mut rng));
        theta.mu = 0.7;
        let eta_work = linear_predictor(&theta, &design.frame);
        let (b, g, m) = design.to_original(&theta.beta, &theta.gamma, theta.mu).unwrap();
        let eta_orig = x.dot(&b) + z.dot(&g) + m;
        for i in 0..n {
            assert_abs_diff_eq!(eta_work[i], eta_orig[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn prior_kind_parses() {
        assert_eq!("group".parse::<PriorKind>().unwrap(), PriorKind::GroupLasso);
        assert_eq!("ordinary".parse::<PriorKind>().unwrap(), PriorKind::OrdinaryLasso);
        assert!("ridge".parse::<PriorKind>().is_err());
    }
}
