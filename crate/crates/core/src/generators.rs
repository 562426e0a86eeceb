//! Synthetic data sources: Lorenz trajectories, exact modal signals,
//! sinusoid mixtures and additive disturbances.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::timeseries::SnapshotMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub x0: [f64; 3],
}

impl Default for LorenzParams {
    /// The classical chaotic regime sampled at `dt = 0.01`.
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            x0: [1.0, 1.0, 1.0],
        }
    }
}

impl LorenzParams {
    fn field(&self, s: &Vector3<f64>) -> Vector3<f64> {
        Vector3::new(
            self.sigma * (s.y - s.x),
            s.x * (self.rho - s.z) - s.y,
            s.x * s.y - self.beta * s.z,
        )
    }

    fn rk4_step(&self, s: &Vector3<f64>, h: f64) -> Vector3<f64> {
        let k1 = self.field(s);
        let k2 = self.field(&(s + k1 * (h / 2.0)));
        let k3 = self.field(&(s + k2 * (h / 2.0)));
        let k4 = self.field(&(s + k3 * h));
        s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }
}

/// Fixed-step RK4 trajectory of `n` states (the first is `x0`), one column
/// per step of `dt`.
pub fn lorenz_simulate(p: &LorenzParams, n: usize) -> Result<SnapshotMatrix> {
    lorenz_simulate_substeps(p, n, 1)
}

/// Like [`lorenz_simulate`] but integrating with `substeps` RK4 steps of
/// `dt / substeps` between stored samples.
pub fn lorenz_simulate_substeps(p: &LorenzParams, n: usize, substeps: usize) -> Result<SnapshotMatrix> {
    if !(p.dt > 0.0) || !p.dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {}", p.dt)));
    }
    if n < 2 || substeps == 0 {
        return Err(Error::Config(
            "a trajectory needs at least two stored states".into(),
        ));
    }
    let h = p.dt / substeps as f64;
    let mut state = Vector3::from(p.x0);
    let mut out = DMatrix::zeros(3, n);
    for k in 0..n {
        if !state.iter().all(|v| v.is_finite()) {
            return Err(Error::Integration { step: k });
        }
        out.set_column(k, &state);
        for _ in 0..substeps {
            state = p.rk4_step(&state, h);
        }
    }
    SnapshotMatrix::new(out)?
        .with_labels(vec!["x".into(), "y".into(), "z".into()])
        .map(|s| s.with_dt(p.dt))
}

/// `f_k = sum_j v_j alpha_j lambda_j^k` for `k = 0..n`, which must be real.
pub fn synthetic_kmd(
    eigenvalues: &[C64],
    modes: &DMatrix<C64>,
    amplitudes: &[C64],
    n: usize,
) -> Result<SnapshotMatrix> {
    let r = eigenvalues.len();
    if modes.ncols() != r || amplitudes.len() != r {
        return Err(Error::Spec(format!(
            "{r} eigenvalues, {} modes, {} amplitudes",
            modes.ncols(),
            amplitudes.len()
        )));
    }
    if r == 0 || modes.nrows() == 0 {
        return Err(Error::Spec("empty modal specification".into()));
    }
    let mut out = DMatrix::zeros(modes.nrows(), n);
    for k in 0..n {
        let mut col = nalgebra::DVector::<C64>::zeros(modes.nrows());
        for j in 0..r {
            col += modes.column(j) * (amplitudes[j] * eigenvalues[j].powi(k as i32));
        }
        for (i, z) in col.iter().enumerate() {
            if z.im.abs() > 1e-10 * z.re.abs().max(1.0) {
                return Err(Error::Spec(format!(
                    "signal is not real at k = {k} (imaginary part {:e}); \
                     eigenvalues, modes and amplitudes must be conjugate-closed",
                    z.im
                )));
            }
            out[(i, k)] = z.re;
        }
    }
    SnapshotMatrix::new(out)
}

/// Convenience: builds a conjugate-closed scalar signal from `(lambda, alpha)`
/// pairs in the upper half plane (and real axis), each mode equal to 1.
pub fn scalar_modal_signal(terms: &[(C64, C64)], n: usize) -> Result<SnapshotMatrix> {
    let mut eigs = Vec::new();
    let mut amps = Vec::new();
    for (lam, a) in terms {
        eigs.push(*lam);
        amps.push(*a);
        if lam.im != 0.0 {
            eigs.push(lam.conj());
            amps.push(a.conj());
        }
    }
    let modes = DMatrix::from_element(1, eigs.len(), C64::new(1.0, 0.0));
    synthetic_kmd(&eigs, &modes, &amps, n)
}

/// `offset + sum_i a_i sin(omega_i k + phi_i)` for `k = 0..n`.
pub fn sinusoids(components: &[(f64, f64, f64)], offset: f64, n: usize) -> Result<SnapshotMatrix> {
    let row: Vec<f64> = (0..n)
        .map(|k| {
            offset
                + components
                    .iter()
                    .map(|(a, w, phi)| a * (w * k as f64 + phi).sin())
                    .sum::<f64>()
        })
        .collect();
    SnapshotMatrix::new(DMatrix::from_row_slice(1, n, &row))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisturbanceKind {
    /// Constant offset over the whole interval.
    Step,
    /// Triangle peaking at the interval midpoint.
    Spike,
    /// Linear rise reaching the magnitude at the last index.
    Ramp,
}

/// Adds a disturbance to every observable on `t_start .. t_start + length`.
pub fn inject_disturbance(
    s: &SnapshotMatrix,
    t_start: usize,
    length: usize,
    kind: DisturbanceKind,
    magnitude: f64,
) -> Result<SnapshotMatrix> {
    if length == 0 || t_start + length > s.len() {
        return Err(Error::Bounds(format!(
            "disturbance {t_start}..{} outside 0..{}",
            t_start + length,
            s.len()
        )));
    }
    let mut out = s.clone();
    for i in 0..length {
        let shape = match kind {
            DisturbanceKind::Step => 1.0,
            DisturbanceKind::Ramp => (i + 1) as f64 / length as f64,
            DisturbanceKind::Spike => {
                let mid = (length - 1) as f64 / 2.0;
                let half = (mid + 1.0).max(1.0);
                1.0 - (i as f64 - mid).abs() / half
            }
        };
        if magnitude == 0.0 {
            continue;
        }
        let k = t_start + i;
        let col: Vec<f64> = s
            .values()
            .column(k)
            .iter()
            .map(|v| v + magnitude * shape)
            .collect();
        out.set_snapshot(k, &col)?;
    }
    Ok(out)
}

/// Checks that a modal specification is closed under conjugation.
pub fn is_conjugate_closed(eigenvalues: &[C64]) -> bool {
    linalg::pair_conjugates(eigenvalues)
        .iter()
        .all(|(i, p)| p.is_some() || eigenvalues[*i].im == 0.0)
}
