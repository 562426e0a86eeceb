//! Thin wrappers over nalgebra decompositions with error reporting instead of
//! panics, plus a few complex-matrix helpers.

use faer::Mat;
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

fn to_faer<T>(m: &DMatrix<T>) -> Mat<T>
where
    T: Copy + nalgebra::Scalar + faer::traits::ComplexField,
{
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer<T: Copy + nalgebra::Scalar>(m: faer::MatRef<'_, T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = u diag(s) v_t` with singular values in nonincreasing order.
#[derive(Debug, Clone)]
pub struct Svd<T: nalgebra::Scalar> {
    pub u: DMatrix<T>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<T>,
}

macro_rules! thin_svd {
    ($name:ident, $t:ty, $re:expr, $finite:expr) => {
        pub fn $name(m: &DMatrix<$t>) -> Result<Svd<$t>> {
            if m.is_empty() {
                return Err(Error::Shape("SVD of an empty matrix".into()));
            }
            if !m.iter().all($finite) {
                return Err(Error::Numerical("non-finite entry in SVD input".into()));
            }
            let svd = to_faer(m)
                .thin_svd()
                .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
            let s = svd.S().column_vector();
            Ok(Svd {
                u: from_faer(svd.U()),
                singular_values: DVector::from_fn(s.nrows(), |i, _| $re(s[i])),
                v_t: from_faer(svd.V()).adjoint(),
            })
        }
    };
}

thin_svd!(svd_real_ref, f64, |v: f64| v, |v: &f64| v.is_finite());
thin_svd!(svd_complex, C64, |v: C64| v.re, |v: &C64| v.re.is_finite() && v.im.is_finite());

pub fn svd_real(m: DMatrix<f64>) -> Result<Svd<f64>> {
    svd_real_ref(&m)
}

/// Eigenvalues of a real square matrix, conjugate pairs adjacent with the
/// positive imaginary part first.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![C64::new(a[(0, 0)], 0.0)]);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite entry in eigenproblem".into()));
    }
    let mut ev: Vec<C64> = to_faer(a)
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue iteration did not converge: {e:?}")))?
        .into_iter()
        .map(|z| C64::new(z.re, z.im))
        .collect();
    let mut sorted = Vec::with_capacity(n);
    for pair in pair_conjugates(&ev) {
        match pair {
            (i, Some(j)) => {
                // Exact conjugates, upper half-plane member first.
                let z = if ev[i].im >= 0.0 { ev[i] } else { ev[j] };
                sorted.push(z);
                sorted.push(z.conj());
            }
            (i, None) => sorted.push(ev[i]),
        }
    }
    ev = sorted;
    Ok(ev)
}

/// Groups indices of `values` into conjugate pairs. Real values (and values
/// without a partner) come back as `(i, None)`; a pair as `(i, Some(j))` with
/// `i < j`. Output order follows the first index.
pub fn pair_conjugates(values: &[C64]) -> Vec<(usize, Option<usize>)> {
    let scale = values.iter().fold(0.0_f64, |m, z| m.max(z.norm())).max(1.0);
    let tol = 1e-10 * scale;
    let mut used = vec![false; values.len()];
    let mut out = Vec::new();
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        if values[i].im.abs() <= tol * 1e-3 {
            out.push((i, None));
            continue;
        }
        let target = values[i].conj();
        let partner = (i + 1..values.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (values[j] - target).norm()))
            .filter(|&(_, dist)| dist <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j);
        if let Some(j) = partner {
            used[j] = true;
        }
        out.push((i, partner));
    }
    out
}

/// Smallest singular value of `m` and its right singular vector.
pub fn min_singular_pair(m: DMatrix<C64>) -> Result<(f64, DVector<C64>)> {
    let n = m.ncols();
    // Pad short matrices so the thin SVD still yields a full right basis.
    let m = if m.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(&m);
        p
    } else {
        m
    };
    let svd = svd_complex(&m)?;
    let k = n - 1;
    Ok((svd.singular_values[k], svd.v_t.row(k).adjoint()))
}

/// Minimum-norm least-squares solution of `a x = b` via SVD, discarding
/// singular values below `rcond * sigma_max`. Returns the solution and the
/// numerical rank that was used.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>, rcond: f64) -> Result<(DVector<C64>, usize)> {
    if a.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Numerical("non-finite entry in least-squares system".into()));
    }
    let svd = svd_complex(a)?;
    let cut = rcond * svd.singular_values[0];
    let rank = svd.singular_values.iter().filter(|s| **s > cut).count();
    let (u, v_t) = (&svd.u, &svd.v_t);
    let mut x = DVector::zeros(a.ncols());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cut {
            let coef = u.column(i).dotc(b) / C64::new(*s, 0.0);
            x += v_t.row(i).adjoint() * coef;
        }
    }
    Ok((x, rank))
}

/// Real pseudo-inverse with relative cutoff `rcond`.
pub fn pinv(a: &DMatrix<f64>, rcond: f64) -> Result<DMatrix<f64>> {
    let svd = svd_real_ref(a)?;
    let cut = rcond * svd.singular_values[0];
    let mut out = DMatrix::zeros(a.ncols(), a.nrows());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cut {
            out += svd.v_t.row(i).transpose() * svd.u.column(i).transpose() / *s;
        }
    }
    Ok(out)
}
