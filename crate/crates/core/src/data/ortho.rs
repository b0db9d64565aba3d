use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::GroupStructure;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Group-wise thin QR factorization of the mean-centered covariates:
/// `X_k - 1 c_k^T = Q_k R_k` with `Q_k^T Q_k = I` and `R_k` upper triangular
/// with a positive diagonal. Columns of `q` keep the positions of `X`.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis<T> {
    pub q: Array2<T>,
    pub r: Vec<Array2<T>>,
    pub centers: Array1<T>,
    pub groups: GroupStructure,
}

const RANK_TOL: f64 = 1e-8;

/// Orthonormalizes each group of columns after centering.
///
/// Uses Gram-Schmidt with one full reorthogonalization pass and no
/// pivoting; a column whose residual norm falls below `1e-8` times its
/// centered norm makes the group rank deficient and is an error.
pub fn group_orthonormalize<T: Real>(x: &Array2<T>, groups: &GroupStructure) -> Result<OrthonormalBasis<T>> {
    let (n, p) = x.dim();
    if groups.n_columns() != p {
        return Err(Error::Dimension { expected: p, actual: groups.n_columns() });
    }
    if p > 0 && n <= groups.max_size() {
        return Err(Error::InvalidData(format!(
            "need more rows ({n}) than the largest group size ({})",
            groups.max_size()
        )));
    }
    let centers = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(p));
    let centered = x - &centers;
    let mut q = Array2::zeros((n, p));
    let mut rs = Vec::with_capacity(groups.n_groups());
    for k in 0..groups.n_groups() {
        let cols = groups.members(k);
        let m = cols.len();
        let mut r = Array2::zeros((m, m));
        for (a, &j) in cols.iter().enumerate() {
            let orig = centered.column(j);
            let orig_norm = norm(orig);
            let mut v = orig.to_owned();
            for _pass in 0..2 {
                for (b, &jb) in cols[..a].iter().enumerate() {
                    let qb = q.column(jb);
                    let proj = qb.dot(&v);
                    r[[b, a]] += proj;
                    v.scaled_add(-proj, &qb);
                }
            }
            let len = norm(v.view());
            if !(len > T::lit(RANK_TOL) * orig_norm) || len == T::zero() {
                return Err(Error::RankDeficient { group: k, column: j });
            }
            r[[a, a]] = len;
            q.column_mut(j).assign(&(v / len));
        }
        rs.push(r);
    }
    Ok(OrthonormalBasis { q, r: rs, centers, groups: groups.clone() })
}

fn norm<T: Real>(v: ArrayView1<T>) -> T {
    v.dot(&v).sqrt()
}

impl<T: Real> OrthonormalBasis<T> {
    pub fn p(&self) -> usize {
        self.q.ncols()
    }

    /// `R_k beta_k` for each group: original-scale coefficients mapped onto
    /// the orthonormal basis.
    pub fn to_ortho(&self, beta: &Array1<T>) -> Result<Array1<T>> {
        self.check_len(beta.len())?;
        let mut out = Array1::zeros(beta.len());
        for (k, r) in self.r.iter().enumerate() {
            let cols = self.groups.members(k);
            for (a, &ja) in cols.iter().enumerate() {
                let mut s = T::zero();
                for (b, &jb) in cols.iter().enumerate().skip(a) {
                    s += r[[a, b]] * beta[jb];
                }
                out[ja] = s;
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.p() {
            return Err(Error::Dimension { expected: self.p(), actual: len });
        }
        Ok(())
    }
}

/// Maps coefficients on the orthonormal basis back to the covariate scale
/// by solving `R_k b_k = beta_k` for every group.
pub fn back_transform<T: Real>(beta_ortho: &Array1<T>, basis: &OrthonormalBasis<T>) -> Result<Array1<T>> {
    basis.check_len(beta_ortho.len())?;
    let mut out = Array1::zeros(beta_ortho.len());
    for (k, r) in basis.r.iter().enumerate() {
        let cols = basis.groups.members(k);
        for a in (0..cols.len()).rev() {
            let mut s = beta_ortho[cols[a]];
            for b in a + 1..cols.len() {
                s -= r[[a, b]] * out[cols[b]];
            }
            out[cols[a]] = s / r[[a, a]];
        }
    }
    Ok(out)
}

/// [`back_transform`] applied to every row of a draws-by-p matrix.
pub fn back_transform_draws<T: Real>(draws: &Array2<T>, basis: &OrthonormalBasis<T>) -> Result<Array2<T>> {
    basis.check_len(draws.ncols())?;
    let mut out = Array2::zeros(draws.dim());
    for (src, mut dst) in draws.rows().into_iter().zip(out.rows_mut()) {
        dst.assign(&back_transform(&src.to_owned(), basis)?);
    }
    Ok(out)
}

/// Column means and sample standard deviations (divisor n - 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization<T> {
    pub means: Array1<T>,
    pub sds: Array1<T>,
}

/// Centers each column and scales it to unit sample variance.
pub fn standardize_columns<T: Real>(z: &Array2<T>) -> Result<(Array2<T>, Standardization<T>)> {
    let (n, q) = z.dim();
    if q == 0 {
        return Ok((z.clone(), Standardization { means: Array1::zeros(0), sds: Array1::zeros(0) }));
    }
    if n < 2 {
        return Err(Error::InvalidData("need at least two rows to standardize".into()));
    }
    let means = z.mean_axis(Axis(0)).expect("non-empty");
    let mut sds = Array1::zeros(q);
    for j in 0..q {
        let col = z.column(j);
        let ss: T = col.iter().map(|&v| (v - means[j]) * (v - means[j])).sum();
        let sd = (ss / T::from_usize_lossy(n - 1)).sqrt();
        if !(sd > T::zero()) {
            return Err(Error::InvalidData(format!("unpenalized covariate {} is constant", j + 1)));
        }
        sds[j] = sd;
    }
    let out = (z - &means) / &sds;
    Ok((out, Standardization { means, sds }))
}
