//! Refined Rayleigh-Ritz data driven modal decomposition.
//!
//! Given snapshot pairs `Y = A X` with `A` never formed, the pairs are
//! extracted from the POD subspace of the column-scaled `X`. A thin QR of
//! `[U_r, A U_r]` yields both the Rayleigh quotient and, for every Ritz value,
//! the residual-minimizing (refined) vector in that subspace together with the
//! optimal residual. The residual is what makes the pairs usable as a
//! trust signal: pairs with small residuals are safe to extrapolate with.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmd::{self, normalize_columns, RitzDecomposition, RitzMethod};
use crate::error::{Error, Result};
use crate::linalg::{self, C64};

/// Residual acceptance threshold used in the influenza case study.
pub const DEFAULT_ETA: f64 = 0.075;

/// Slack allowed for the conjugate twin of an accepted pair.
const CONJUGATE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrrConfig {
    /// Relative singular value cutoff for numerical rank.
    pub epsilon: f64,
    /// Ritz pairs with residual below `eta` are accepted.
    pub eta: f64,
}

impl Default for RrrConfig {
    fn default() -> Self {
        Self {
            epsilon: dmd::DEFAULT_EPSILON,
            eta: DEFAULT_ETA,
        }
    }
}

impl RrrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

pub fn ddmd_rrr(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &RrrConfig) -> Result<RitzDecomposition> {
    cfg.validate()?;
    dmd::check_pair_shapes(x, y)?;
    let l = x.nrows();

    // Column scaling; zero columns get a zero inverse scale.
    let inv_scale: Vec<f64> = x
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                1.0 / n
            } else {
                0.0
            }
        })
        .collect();
    if inv_scale.iter().all(|s| *s == 0.0) {
        return Err(Error::Rank("all snapshot columns are zero".into()));
    }
    let d_inv = DMatrix::from_diagonal(&DVector::from_vec(inv_scale));
    let x1 = x * &d_inv;
    let y1 = y * &d_inv;

    let svd = dmd::truncated_svd(&x1, cfg.epsilon)?;
    let r = svd.rank();
    let inv_sigma = DMatrix::from_diagonal(&DVector::from_iterator(
        r,
        svd.sigma.iter().map(|s| 1.0 / s),
    ));
    let b = y1 * (&svd.v * inv_sigma);

    // Thin QR of [U_r, B_r]; only R is needed. When l < 2r the missing rows
    // of R are zero.
    let mut ub = DMatrix::zeros(l, 2 * r);
    ub.columns_mut(0, r).copy_from(&svd.u);
    ub.columns_mut(r, r).copy_from(&b);
    if ub.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entries in [U_r, B_r]".into()));
    }
    let r_thin = ub.qr().r();
    let mut rr = DMatrix::<f64>::zeros(2 * r, 2 * r);
    rr.rows_mut(0, r_thin.nrows()).copy_from(&r_thin);

    let r11 = rr.view((0, 0), (r, r)).into_owned();
    let r12 = rr.view((0, r), (r, r)).into_owned();
    let r22 = rr.view((r, r), (r, r)).into_owned();

    // Rayleigh quotient U_r^T A U_r; R11 is diagonal with unit-modulus entries.
    let mut a_r = r12.clone();
    for i in 0..r {
        let s = r11[(i, i)];
        a_r.row_mut(i).scale_mut(s);
    }
    let eigenvalues = linalg::eigenvalues(&a_r)?;

    let r11c = linalg::to_complex(&r11);
    let r12c = linalg::to_complex(&r12);
    let r22c = linalg::to_complex(&r22);
    let a_c = linalg::to_complex(&a_r);

    // Each representative (real value or upper member of a pair) is independent.
    let reps = linalg::pair_conjugates(&eigenvalues);
    let solved: Vec<Result<(f64, DVector<C64>)>> = reps
        .par_iter()
        .map(|&(i, _)| {
            let lam = eigenvalues[i];
            let mut stacked = DMatrix::<C64>::zeros(2 * r, r);
            stacked
                .rows_mut(0, r)
                .copy_from(&(&r12c - &r11c * lam));
            stacked.rows_mut(r, r).copy_from(&r22c);
            linalg::min_singular_pair(stacked)
        })
        .collect();

    let mut w = DMatrix::<C64>::zeros(r, r);
    let mut residuals = vec![0.0; r];
    for (&(i, partner), res) in reps.iter().zip(solved) {
        let (sigma, vec) = res?;
        residuals[i] = sigma;
        w.set_column(i, &vec);
        if let Some(j) = partner {
            residuals[j] = sigma;
            w.set_column(j, &vec.map(|z| z.conj()));
        }
    }
    let rayleigh: Vec<C64> = (0..r)
        .map(|i| {
            let wi = w.column(i);
            wi.dotc(&(&a_c * wi))
        })
        .collect();

    let mut modes = linalg::to_complex(&svd.u) * w;
    normalize_columns(&mut modes);
    Ok(RitzDecomposition {
        eigenvalues,
        modes,
        residuals: Some(residuals),
        rayleigh: Some(rayleigh),
        basis: svd.u,
        method: RitzMethod::Rrr,
    })
}

/// Indices of pairs with residual below `eta`. The conjugate twin of an
/// accepted pair is kept when it misses the threshold by at most 1e-12.
pub fn accepted_indices(dec: &RitzDecomposition, eta: f64) -> Result<Vec<usize>> {
    let res = dec.residuals.as_ref().ok_or_else(|| {
        Error::Config("mode selection needs residuals from the refined decomposition".into())
    })?;
    let mut keep = vec![false; dec.len()];
    for (i, partner) in linalg::pair_conjugates(&dec.eigenvalues) {
        match partner {
            None => keep[i] = res[i] < eta,
            Some(j) => {
                let (a, b) = (res[i] < eta, res[j] < eta);
                let close = |v: f64| v < eta + CONJUGATE_SLACK;
                let both = (a && close(res[j])) || (b && close(res[i]));
                keep[i] = both;
                keep[j] = both;
            }
        }
    }
    Ok((0..dec.len()).filter(|&i| keep[i]).collect())
}

/// Keeps the Ritz pairs with residual below `eta`; may return an empty set.
pub fn select_modes(dec: &RitzDecomposition, eta: f64) -> Result<RitzDecomposition> {
    Ok(dec.subset(&accepted_indices(dec, eta)?))
}

/// Largest Ritz value modulus, or `Absent` when no pair survived selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum SpectralRadius {
    Finite(f64),
    Absent,
}

impl SpectralRadius {
    /// `Absent` maps to `+inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            SpectralRadius::Finite(v) => v,
            SpectralRadius::Absent => f64::INFINITY,
        }
    }

    pub fn within(self, lo: f64, hi: f64) -> bool {
        let v = self.as_f64();
        v >= lo && v <= hi
    }
}

pub fn spectral_radius(dec: &RitzDecomposition) -> SpectralRadius {
    dec.eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .map_or(SpectralRadius::Absent, SpectralRadius::Finite)
}
