//! Koopman mode decomposition: modal amplitudes and spectral extrapolation.
//!
//! A fitted model represents lifted snapshots as
//! `h_k ~ sum_j v_j alpha_j lambda_j^(k-1)`, with `k = 1` at the first Hankel
//! column. Reading the trailing `d` entries of every mode gives the original
//! observables, so evaluating the sum past the training span extrapolates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dmd::RitzDecomposition;
use crate::error::{Error, Result};
use crate::hankel::HankelMatrix;
use crate::linalg::{self, C64};

/// Temporal and spatial weights for the amplitude least-squares problem.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightSpec {
    /// One weight per snapshot; `None` means all ones.
    pub temporal: Option<Vec<f64>>,
    /// Diagonal of the spatial weighting matrix; `None` means identity.
    pub spatial: Option<Vec<f64>>,
}

impl WeightSpec {
    pub fn uniform() -> Self {
        Self::default()
    }

    /// Weight 1 on the `recent` latest of `total` snapshots and `floor`
    /// everywhere else.
    pub fn favor_recent(recent: usize, total: usize, floor: f64) -> Self {
        let temporal = (0..total)
            .map(|k| if k + recent >= total { 1.0 } else { floor })
            .collect();
        Self {
            temporal: Some(temporal),
            spatial: None,
        }
    }

    fn validate(&self, n_snapshots: usize, dim: usize) -> Result<()> {
        if let Some(w) = &self.temporal {
            if w.len() != n_snapshots {
                return Err(Error::Shape(format!(
                    "{} temporal weights for {n_snapshots} snapshots",
                    w.len()
                )));
            }
            if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config("temporal weights must be finite and >= 0".into()));
            }
            if w.iter().all(|v| *v == 0.0) {
                return Err(Error::Config("at least one temporal weight must be positive".into()));
            }
        }
        if let Some(o) = &self.spatial {
            if o.len() != dim {
                return Err(Error::Shape(format!(
                    "{} spatial weights for dimension {dim}",
                    o.len()
                )));
            }
            if o.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Config("spatial weights must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Default floor for down-weighted snapshots (unit round-off).
pub const FORGETTING_FLOOR: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeFit {
    pub amplitudes: Vec<C64>,
    /// Set when the normal matrix was numerically singular and a
    /// pseudo-inverse solve was used instead.
    pub ill_conditioned: bool,
}

/// `alpha = pinv(V) f_0`; exact when the modes span the snapshots.
pub fn fit_amplitudes_exact(modes: &DMatrix<C64>, first_snapshot: &[f64]) -> Result<Vec<C64>> {
    if modes.nrows() != first_snapshot.len() {
        return Err(Error::Shape(format!(
            "modes have {} rows, snapshot has {}",
            modes.nrows(),
            first_snapshot.len()
        )));
    }
    if modes.ncols() == 0 {
        return Err(Error::Rank("no modes to fit".into()));
    }
    let b = DVector::from_iterator(
        first_snapshot.len(),
        first_snapshot.iter().map(|v| C64::new(*v, 0.0)),
    );
    let (alpha, rank) = linalg::lstsq(modes, &b, 1e-13)?;
    if rank < modes.ncols() {
        return Err(Error::Rank(format!(
            "mode matrix has numerical rank {rank} < {}",
            modes.ncols()
        )));
    }
    Ok(alpha.iter().copied().collect())
}

/// `r x n` Vandermonde matrix with entries `lambda_j^k`, `k = 0..n`.
pub fn vandermonde(eigenvalues: &[C64], n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(eigenvalues.len(), n, |j, k| eigenvalues[j].powi(k as i32))
}

/// Weighted least-squares amplitudes
/// `argmin sum_k w_k^2 || sqrt(Omega) (f_k - sum_j v_j alpha_j lambda_j^k) ||^2`
/// over the columns `f_k` of `snapshots`, solved through the Hadamard-product
/// form of the normal equations.
pub fn fit_amplitudes_wls(
    modes: &DMatrix<C64>,
    eigenvalues: &[C64],
    snapshots: &DMatrix<f64>,
    weights: &WeightSpec,
) -> Result<AmplitudeFit> {
    let (dim, n) = snapshots.shape();
    let r = eigenvalues.len();
    if modes.shape() != (dim, r) {
        return Err(Error::Shape(format!(
            "modes are {:?}, expected {:?}",
            modes.shape(),
            (dim, r)
        )));
    }
    if r == 0 {
        return Err(Error::Rank("no modes to fit".into()));
    }
    if r > n {
        return Err(Error::Shape(format!("{r} modes but only {n} snapshots")));
    }
    weights.validate(n, dim)?;

    let mut v = modes.clone();
    let mut x = linalg::to_complex(snapshots);
    if let Some(omega) = &weights.spatial {
        for (i, o) in omega.iter().enumerate() {
            let s = o.sqrt();
            v.row_mut(i).scale_mut(s);
            x.row_mut(i).scale_mut(s);
        }
    }
    let w: Vec<f64> = weights
        .temporal
        .clone()
        .unwrap_or_else(|| vec![1.0; n]);
    let vand = vandermonde(eigenvalues, n);
    let mut vand_w = vand.clone();
    let mut x_w = x;
    for k in 0..n {
        let wk = w[k];
        vand_w.column_mut(k).scale_mut(wk);
        x_w.column_mut(k).scale_mut(wk);
    }

    // G = (V*V) o conj(Vand W^2 Vand*),  rhs = (conj(Vand W) o (V* X W)) 1.
    let gram = v.adjoint() * &v;
    let temporal = (&vand_w * vand_w.adjoint()).map(|z| z.conj());
    let g = gram.component_mul(&temporal);
    let proj = v.adjoint() * x_w;
    let rhs: DVector<C64> = vand_w
        .map(|z| z.conj())
        .component_mul(&proj)
        .column_sum();

    if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        || rhs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::Numerical(
            "non-finite normal equations (eigenvalue powers overflowed)".into(),
        ));
    }

    if let Some(chol) = g.clone().cholesky() {
        let alpha = chol.solve(&rhs);
        if alpha.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(AmplitudeFit {
                amplitudes: alpha.iter().copied().collect(),
                ill_conditioned: false,
            });
        }
    }
    log::warn!("amplitude normal matrix is singular, falling back to pseudo-inverse");
    let (alpha, _) = linalg::lstsq(&g, &rhs, 1e-15)?;
    Ok(AmplitudeFit {
        amplitudes: alpha.iter().copied().collect(),
        ill_conditioned: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum AmplitudeMethod {
    /// `pinv(V) h_1`.
    Exact,
    /// Weighted least squares over all Hankel columns.
    LeastSquares { weights: WeightSpec },
    /// Weight 1 on the `recent` latest columns and `floor` on the rest.
    FavorRecent { recent: usize, floor: f64 },
}

impl Default for AmplitudeMethod {
    fn default() -> Self {
        AmplitudeMethod::LeastSquares {
            weights: WeightSpec::uniform(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmdModel {
    pub eigenvalues: Vec<C64>,
    /// `l x r` lifted modes, unit columns.
    pub modes: DMatrix<C64>,
    pub amplitudes: Vec<C64>,
    /// Original observable dimension.
    pub d: usize,
    /// Lift depth; `l = d * n_h`.
    pub n_h: usize,
    /// Absolute time index of the snapshot reconstructed at `k = 1`.
    pub t0_index: usize,
    /// Number of Hankel columns the amplitudes were fitted on.
    pub span: usize,
    pub ill_conditioned: bool,
}

impl KmdModel {
    /// Fits amplitudes for the pairs in `dec` against the columns of `hankel`.
    pub fn fit(
        hankel: &HankelMatrix,
        dec: &RitzDecomposition,
        method: &AmplitudeMethod,
    ) -> Result<Self> {
        if dec.lifted_dim() != hankel.lifted_dim() {
            return Err(Error::Shape(format!(
                "modes live in dimension {}, Hankel rows are {}",
                dec.lifted_dim(),
                hankel.lifted_dim()
            )));
        }
        let data = hankel.data();
        let (amplitudes, ill) = match method {
            AmplitudeMethod::Exact => {
                let h1: Vec<f64> = data.column(0).iter().copied().collect();
                (fit_amplitudes_exact(&dec.modes, &h1)?, false)
            }
            AmplitudeMethod::LeastSquares { weights } => {
                let fit = fit_amplitudes_wls(&dec.modes, &dec.eigenvalues, data, weights)?;
                (fit.amplitudes, fit.ill_conditioned)
            }
            AmplitudeMethod::FavorRecent { recent, floor } => {
                let weights = WeightSpec::favor_recent(*recent, data.ncols(), *floor);
                let fit = fit_amplitudes_wls(&dec.modes, &dec.eigenvalues, data, &weights)?;
                (fit.amplitudes, fit.ill_conditioned)
            }
        };
        Ok(Self {
            eigenvalues: dec.eigenvalues.clone(),
            modes: dec.modes.clone(),
            amplitudes,
            d: hankel.d(),
            n_h: hankel.n_h(),
            t0_index: hankel.first_tail_index(),
            span: data.ncols(),
            ill_conditioned: ill,
        })
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Trailing `d x r` block of the modes.
    pub fn tail_modes(&self) -> DMatrix<C64> {
        self.modes.rows((self.n_h - 1) * self.d, self.d).into_owned()
    }

    /// `|alpha_j| * ||v_hat_j||` for each pair: the weight of the mode in the
    /// original observables.
    pub fn mode_amplitudes(&self) -> Vec<f64> {
        let tail = self.tail_modes();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm() * tail.column(j).norm())
            .collect()
    }

    /// Absolute index of the last snapshot used for training.
    pub fn last_training_index(&self) -> usize {
        self.t0_index + self.span - 1
    }

    fn powers(&self, exponent: i64) -> Result<Vec<C64>> {
        let p = i32::try_from(exponent).map_err(|_| Error::Overflow {
            mode: 0,
            power: exponent,
        })?;
        self.eigenvalues
            .iter()
            .zip(&self.amplitudes)
            .enumerate()
            .map(|(j, (lam, a))| {
                let z = lam.powi(p) * a;
                if z.re.is_finite() && z.im.is_finite() {
                    Ok(z)
                } else {
                    Err(Error::Overflow {
                        mode: j,
                        power: exponent,
                    })
                }
            })
            .collect()
    }

    /// Complex-valued `sum_j v_hat_j alpha_j lambda_j^(k-1)` for
    /// `k = k_from..=k_to`, as a `d x n` matrix.
    pub fn predict_complex(&self, k_from: usize, k_to: usize) -> Result<DMatrix<C64>> {
        if k_to < k_from {
            return Err(Error::Bounds(format!("empty range {k_from}..={k_to}")));
        }
        let tail = self.tail_modes();
        let n = k_to - k_from + 1;
        let mut out = DMatrix::<C64>::zeros(self.d, n);
        for (c, k) in (k_from..=k_to).enumerate() {
            let coef = DVector::from_vec(self.powers(k as i64 - 1)?);
            out.set_column(c, &(&tail * coef));
        }
        Ok(out)
    }

    /// Real predictions for relative steps `k_from..=k_to` (`k = 1` is the
    /// first reconstructed snapshot, at absolute index `t0_index`).
    pub fn predict(&self, k_from: usize, k_to: usize) -> Result<DMatrix<f64>> {
        let z = self.predict_complex(k_from, k_to)?;
        for (c, col) in z.column_iter().enumerate() {
            let re = col.map(|v| v.re).norm();
            let im = col.map(|v| v.im).norm();
            if im > 1e-8 * re.max(f64::MIN_POSITIVE) && im > 1e-300 {
                log::debug!("prediction step {} has imaginary residue {im:e} (real norm {re:e})", k_from + c);
            }
        }
        Ok(z.map(|v| v.re))
    }

    /// Predictions for absolute time indices `t_from..=t_to`.
    pub fn predict_at(&self, t_from: usize, t_to: usize) -> Result<DMatrix<f64>> {
        if t_from + 1 < self.t0_index {
            return Err(Error::Bounds(format!(
                "index {t_from} lies before the model origin {}",
                self.t0_index
            )));
        }
        self.predict(t_from + 1 - self.t0_index, t_to + 1 - self.t0_index)
    }
}
