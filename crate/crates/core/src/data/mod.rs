//! Survival data with delayed entry and interval censoring, its group
//! structure, and the group-wise orthonormal basis used during fitting.

mod io;
mod ortho;

pub use io::{load_dataset, write_dataset, write_groups};
pub use ortho::{back_transform, back_transform_draws, group_orthonormalize, standardize_columns, OrthonormalBasis, Standardization};

use std::collections::HashMap;
use std::fmt;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Partition of the shrinkage covariates into groups. Group `k` carries
/// the weight matrix `m_k I`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStructure {
    labels: Vec<String>,
    membership: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl GroupStructure {
    /// `membership[j]` is the group index of column `j`; groups are numbered
    /// `0..K` and each must be non-empty.
    pub fn new(membership: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        let k = labels.len();
        let mut members = vec![Vec::new(); k];
        for (j, &g) in membership.iter().enumerate() {
            if g >= k {
                return Err(Error::InvalidData(format!("column {j} assigned to unknown group {g}")));
            }
            members[g].push(j);
        }
        if let Some(empty) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvalidData(format!("group '{}' has no columns", labels[empty])));
        }
        Ok(Self { labels, membership, members })
    }

    /// Groups from per-column labels, numbered by first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut names = Vec::new();
        let membership = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                *index.entry(l).or_insert_with(|| {
                    names.push(l.to_string());
                    names.len() - 1
                })
            })
            .collect();
        Self::new(membership, names).expect("labels cover every group")
    }

    /// One group per column (the ordinary lasso).
    pub fn singletons(p: usize) -> Self {
        let labels = (1..=p).map(|j| j.to_string()).collect();
        Self::new((0..p).collect(), labels).expect("singleton groups are valid")
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let membership = sizes.iter().enumerate().flat_map(|(k, &m)| std::iter::repeat_n(k, m)).collect();
        let labels = (1..=sizes.len()).map(|k| k.to_string()).collect();
        Self::new(membership, labels)
    }

    pub fn n_groups(&self) -> usize {
        self.labels.len()
    }

    pub fn n_columns(&self) -> usize {
        self.membership.len()
    }

    pub fn group_of(&self, column: usize) -> usize {
        self.membership[column]
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn members(&self, group: usize) -> &[usize] {
        &self.members[group]
    }

    pub fn size(&self, group: usize) -> usize {
        self.members[group].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn max_size(&self) -> usize {
        self.members.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Observed data: entry time `c0`, censoring interval `[cL, cU]`
/// (`cU = +inf` for right censoring, `cL = cU` for exact times), the
/// shrinkage covariates `x` and the unpenalized covariates `z`.
#[derive(Debug, Clone)]
pub struct SurvivalDataset<T> {
    entry: Array1<T>,
    lower: Array1<T>,
    upper: Array1<T>,
    x: Array2<T>,
    z: Array2<T>,
    groups: GroupStructure,
    x_names: Vec<String>,
    z_names: Vec<String>,
}

impl<T: Real> SurvivalDataset<T> {
    /// Builds and validates a dataset, failing on the first violation.
    pub fn new(
        entry: Array1<T>,
        lower: Array1<T>,
        upper: Array1<T>,
        x: Array2<T>,
        z: Array2<T>,
        groups: GroupStructure,
    ) -> Result<Self> {
        let d = Self::new_unchecked(entry, lower, upper, x, z, groups);
        let report = validate_dataset(&d);
        match report.violations.first() {
            None => Ok(d),
            Some(v) => Err(Error::InvalidData(v.to_string())),
        }
    }

    /// Builds a dataset without checking its invariants; pair with
    /// [`validate_dataset`].
    pub fn new_unchecked(
        entry: Array1<T>,
        lower: Array1<T>,
        upper: Array1<T>,
        x: Array2<T>,
        z: Array2<T>,
        groups: GroupStructure,
    ) -> Self {
        let x_names = (1..=x.ncols()).map(|j| format!("x_{j}")).collect();
        let z_names = (1..=z.ncols()).map(|j| format!("z_{j}")).collect();
        Self { entry, lower, upper, x, z, groups, x_names, z_names }
    }

    pub fn with_names(mut self, x_names: Vec<String>, z_names: Vec<String>) -> Result<Self> {
        if x_names.len() != self.p() {
            return Err(Error::Dimension { expected: self.p(), actual: x_names.len() });
        }
        if z_names.len() != self.q() {
            return Err(Error::Dimension { expected: self.q(), actual: z_names.len() });
        }
        self.x_names = x_names;
        self.z_names = z_names;
        Ok(self)
    }

    /// Same observations and covariates under a different grouping.
    pub fn with_groups(mut self, groups: GroupStructure) -> Result<Self> {
        if groups.n_columns() != self.p() {
            return Err(Error::Dimension { expected: self.p(), actual: groups.n_columns() });
        }
        self.groups = groups;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.lower.len()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn q(&self) -> usize {
        self.z.ncols()
    }
    pub fn entry(&self) -> &Array1<T> {
        &self.entry
    }
    pub fn lower(&self) -> &Array1<T> {
        &self.lower
    }
    pub fn upper(&self) -> &Array1<T> {
        &self.upper
    }
    pub fn x(&self) -> &Array2<T> {
        &self.x
    }
    pub fn z(&self) -> &Array2<T> {
        &self.z
    }
    pub fn groups(&self) -> &GroupStructure {
        &self.groups
    }
    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }
    pub fn z_names(&self) -> &[String] {
        &self.z_names
    }

    pub fn is_exact(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    pub fn is_right_censored(&self, i: usize) -> bool {
        self.upper[i].is_infinite()
    }

    /// Share of rows with an exactly observed event.
    pub fn event_rate(&self) -> f64 {
        (0..self.n()).filter(|&i| self.is_exact(i)).count() as f64 / self.n().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    /// row counts of the columns disagree
    Shape,
    /// c0 < 0
    NegativeEntry,
    /// c0 > cL
    EntryAfterLower,
    /// cL > cU
    LowerAfterUpper,
    /// cL <= 0
    NonPositiveLower,
    /// NaN or infinite value where a finite one is required
    NonFinite,
    /// groups do not partition the columns of X
    GroupPartition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub row: Option<usize>,
    pub column: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.row {
            write!(f, "row {}: ", r + 1)?;
        }
        if let Some(c) = &self.column {
            write!(f, "column {c}: ")?;
        }
        write!(f, "{}", self.detail)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every dataset invariant and reports each violation with its row
/// (zero-based in the struct, printed one-based) and column.
pub fn validate_dataset<T: Real>(d: &SurvivalDataset<T>) -> ValidationReport {
    let mut out = Vec::new();
    let n = d.lower.len();
    let mut push = |rule, row, column: Option<String>, detail: String| {
        out.push(Violation { rule, row, column, detail });
    };
    if d.entry.len() != n || d.upper.len() != n || d.x.nrows() != n || d.z.nrows() != n {
        push(Rule::Shape, None, None, format!(
            "row counts differ: c0 {}, cL {}, cU {}, X {}, Z {}",
            d.entry.len(), n, d.upper.len(), d.x.nrows(), d.z.nrows()
        ));
        return ValidationReport { violations: out };
    }
    for i in 0..n {
        let (c0, cl, cu) = (d.entry[i], d.lower[i], d.upper[i]);
        if !c0.is_finite() {
            push(Rule::NonFinite, Some(i), Some("c0".into()), format!("c0 = {c0} is not finite"));
        } else if c0 < T::zero() {
            push(Rule::NegativeEntry, Some(i), Some("c0".into()), format!("c0 = {c0} is negative"));
        }
        if !cl.is_finite() {
            push(Rule::NonFinite, Some(i), Some("cL".into()), format!("cL = {cl} is not finite"));
        } else if cl <= T::zero() {
            push(Rule::NonPositiveLower, Some(i), Some("cL".into()), format!("cL = {cl} must be positive"));
        }
        if cu.is_nan() || cu == T::neg_infinity() {
            push(Rule::NonFinite, Some(i), Some("cU".into()), format!("cU = {cu} is invalid"));
        }
        if c0.is_finite() && cl.is_finite() && c0 > cl {
            push(Rule::EntryAfterLower, Some(i), None, format!("c0 = {c0} exceeds cL = {cl}"));
        }
        if cl.is_finite() && !cu.is_nan() && cl > cu {
            push(Rule::LowerAfterUpper, Some(i), None, format!("cL = {cl} exceeds cU = {cu}"));
        }
    }
    for ((i, j), v) in d.x.indexed_iter() {
        if !v.is_finite() {
            push(Rule::NonFinite, Some(i), Some(d.x_names.get(j).cloned().unwrap_or_else(|| format!("x_{}", j + 1))), format!("non-finite value {v}"));
        }
    }
    for ((i, j), v) in d.z.indexed_iter() {
        if !v.is_finite() {
            push(Rule::NonFinite, Some(i), Some(d.z_names.get(j).cloned().unwrap_or_else(|| format!("z_{}", j + 1))), format!("non-finite value {v}"));
        }
    }
    if d.groups.n_columns() != d.x.ncols() {
        push(Rule::GroupPartition, None, None, format!(
            "group sizes sum to {} but X has {} columns",
            d.groups.n_columns(), d.x.ncols()
        ));
    }
    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn small() -> SurvivalDataset<f64> {
        SurvivalDataset::new_unchecked(
            array![0.0, 0.5, 1.0],
            array![1.0, 2.0, 3.0],
            array![1.0, f64::INFINITY, 4.0],
            array![[0.1, 0.2], [0.3, -0.1], [0.0, 1.0]],
            Array2::zeros((3, 0)),
            GroupStructure::singletons(2),
        )
    }

    #[test]
    fn valid_dataset_has_no_violations() {
        assert!(validate_dataset(&small()).is_valid());
    }

    #[test]
    fn entry_after_lower_is_reported_once() {
        let mut d = small();
        d.entry[1] = 2.5;
        let r = validate_dataset(&d);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, Rule::EntryAfterLower);
        assert_eq!(r.violations[0].row, Some(1));
    }

    #[test]
    fn nan_in_x_names_row_and_column() {
        let mut d = small();
        d.x[[2, 1]] = f64::NAN;
        let r = validate_dataset(&d);
        assert_eq!(r.violations.len(), 1);
        let v = &r.violations[0];
        assert_eq!((v.rule, v.row, v.column.as_deref()), (Rule::NonFinite, Some(2), Some("x_2")));
    }

    #[test]
    fn group_labels_numbered_by_first_appearance() {
        let g = GroupStructure::from_labels(&["b", "a", "b", "c"]);
        assert_eq!(g.n_groups(), 3);
        assert_eq!(g.membership(), &[0, 1, 0, 2]);
        assert_eq!(g.labels(), &["b", "a", "c"]);
        assert_eq!(g.sizes(), vec![2, 1, 1]);
    }

    #[test]
    fn empty_group_rejected() {
        assert!(GroupStructure::new(vec![0, 0], vec!["a".into(), "b".into()]).is_err());
    }
}
