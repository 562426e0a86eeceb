//! Truncated SVD and Schmid's DMD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Default relative singular value cutoff for numerical rank.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `l x r`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Leading `r` singular values, descending and positive.
    pub sigma: Vec<f64>,
    /// `m x r`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// All singular values of the input, descending.
    pub all_sigma: Vec<f64>,
    /// Fraction of squared Frobenius norm carried by the dropped values.
    pub discarded_energy: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Two-norm distance to the input, `sigma_{r+1}` (0 when nothing was dropped).
    pub fn truncation_error(&self) -> f64 {
        self.all_sigma.get(self.rank()).copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let s = DMatrix::from_diagonal(&DVector::from_vec(self.sigma.clone()));
        &self.u * s * self.v.transpose()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!(
            "rank tolerance must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Keeps singular triplets with `sigma_i > epsilon * sigma_1`.
pub fn truncated_svd(x: &DMatrix<f64>, epsilon: f64) -> Result<TruncatedSvd> {
    check_epsilon(epsilon)?;
    if x.is_empty() {
        return Err(Error::Rank("empty matrix".into()));
    }
    let svd = linalg::svd_real(x.clone())?;
    let all_sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let s1 = all_sigma[0];
    if s1 == 0.0 {
        return Err(Error::Rank("all-zero data matrix".into()));
    }
    let r = all_sigma.iter().take_while(|s| **s > epsilon * s1).count();
    let total: f64 = all_sigma.iter().map(|s| s * s).sum();
    let dropped: f64 = all_sigma[r..].iter().map(|s| s * s).sum();
    let u = svd.u.columns(0, r).into_owned();
    let v = svd.v_t.rows(0, r).transpose();
    Ok(TruncatedSvd {
        u,
        sigma: all_sigma[..r].to_vec(),
        v,
        all_sigma,
        discarded_energy: dropped / total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RitzMethod {
    Schmid,
    Rrr,
}

/// Ritz pairs of the operator implied by `Y = A X`.
#[derive(Debug, Clone)]
pub struct RitzDecomposition {
    pub eigenvalues: Vec<C64>,
    /// `l x r`, unit columns.
    pub modes: DMatrix<C64>,
    /// Optimal residuals `||A v - lambda v||` (refined method only).
    pub residuals: Option<Vec<f64>>,
    /// Rayleigh quotients `v* A v` (refined method only).
    pub rayleigh: Option<Vec<C64>>,
    /// Orthonormal basis `U_r` of the subspace the pairs were extracted from.
    pub basis: DMatrix<f64>,
    pub method: RitzMethod,
}

impl RitzDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn lifted_dim(&self) -> usize {
        self.modes.nrows()
    }

    /// Keeps the pairs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let cols: Vec<DVector<C64>> = indices
            .iter()
            .map(|&i| self.modes.column(i).into_owned())
            .collect();
        let modes = if cols.is_empty() {
            DMatrix::zeros(self.modes.nrows(), 0)
        } else {
            DMatrix::from_columns(&cols)
        };
        Self {
            eigenvalues: indices.iter().map(|&i| self.eigenvalues[i]).collect(),
            modes,
            residuals: self
                .residuals
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
            rayleigh: self
                .rayleigh
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
            basis: self.basis.clone(),
            method: self.method,
        }
    }
}

pub(crate) fn check_pair_shapes(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<()> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!(
            "X is {:?} but Y is {:?}",
            x.shape(),
            y.shape()
        )));
    }
    if x.is_empty() {
        return Err(Error::Shape("empty snapshot matrices".into()));
    }
    Ok(())
}

/// Schmid's DMD: Rayleigh quotient `A_r = U_r^T Y V_r Sigma_r^{-1}` on the
/// POD basis of `X`, and Ritz vectors `U_r w`.
pub fn dmd(x: &DMatrix<f64>, y: &DMatrix<f64>, epsilon: f64) -> Result<RitzDecomposition> {
    check_pair_shapes(x, y)?;
    let svd = truncated_svd(x, epsilon)?;
    let inv_sigma =
        DMatrix::from_diagonal(&DVector::from_iterator(svd.rank(), svd.sigma.iter().map(|s| 1.0 / s)));
    let a_r = (svd.u.transpose() * y) * &svd.v * inv_sigma;
    let eigenvalues = linalg::eigenvalues(&a_r)?;
    let a_c = linalg::to_complex(&a_r);
    let r = a_r.nrows();
    let mut w = DMatrix::<C64>::zeros(r, r);
    for (i, partner) in linalg::pair_conjugates(&eigenvalues) {
        let lambda = eigenvalues[i];
        let shifted = &a_c - DMatrix::<C64>::identity(r, r) * lambda;
        let (_, vec) = linalg::min_singular_pair(shifted)?;
        w.set_column(i, &vec);
        if let Some(j) = partner {
            w.set_column(j, &vec.map(|z| z.conj()));
        }
    }
    let mut modes = linalg::to_complex(&svd.u) * w;
    normalize_columns(&mut modes);
    Ok(RitzDecomposition {
        eigenvalues,
        modes,
        residuals: None,
        rayleigh: None,
        basis: svd.u,
        method: RitzMethod::Schmid,
    })
}

/// Scales each column to unit norm with its largest entry real and positive.
pub(crate) fn normalize_columns(m: &mut DMatrix<C64>) {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| col[i])
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot / pivot.norm();
        col /= phase * n;
    }
}
