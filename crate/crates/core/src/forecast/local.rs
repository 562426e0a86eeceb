use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::report::{ForecastReport, Prediction, PredictionSource};
use crate::hankel::build_hankel;
use crate::kmd::{AmplitudeMethod, KmdModel};
use crate::rrr::{ddmd_rrr, select_modes, RrrConfig};
use crate::timeseries::{relative_error, SnapshotMatrix, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GrowAxis {
    Rows,
    Columns,
    /// Rows on even growth steps since the last reset, columns on odd ones.
    #[default]
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LkpConfig {
    pub n_h_min: usize,
    pub m_h_min: usize,
    /// One-step relative error above which the Hankel matrix restarts.
    pub eps_ref: f64,
    pub tau_l: usize,
    pub grow_axis: GrowAxis,
    pub epsilon: f64,
    /// Residual filter; `None` keeps every Ritz pair.
    pub eta: Option<f64>,
    /// Upper bound on `n_h + m_h`; growth stops there.
    pub max_width: Option<usize>,
    pub amplitudes: AmplitudeMethod,
}

impl Default for LkpConfig {
    fn default() -> Self {
        Self {
            n_h_min: 3,
            m_h_min: 2,
            eps_ref: 0.005,
            tau_l: 1,
            grow_axis: GrowAxis::Alternate,
            epsilon: crate::dmd::DEFAULT_EPSILON,
            eta: None,
            max_width: None,
            amplitudes: AmplitudeMethod::default(),
        }
    }
}

impl LkpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_h_min == 0 || self.m_h_min == 0 {
            return Err(Error::Config(format!(
                "minimal Hankel size {}x{} must be positive",
                self.n_h_min, self.m_h_min
            )));
        }
        if !(self.eps_ref > 0.0) {
            return Err(Error::Config(format!("eps_ref must be positive, got {}", self.eps_ref)));
        }
        if self.tau_l == 0 {
            return Err(Error::Config("local lead time must be at least 1".into()));
        }
        if let Some(w) = self.max_width {
            if w < self.n_h_min + self.m_h_min {
                return Err(Error::Config(format!(
                    "max width {w} is below the minimal window {}",
                    self.n_h_min + self.m_h_min
                )));
            }
        }
        self.rrr().validate()
    }

    fn rrr(&self) -> RrrConfig {
        RrrConfig {
            epsilon: self.epsilon,
            eta: self.eta.unwrap_or(f64::INFINITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalStep {
    pub p: usize,
    pub n_h: usize,
    pub m_h: usize,
    /// Error of the previous one-step prediction; `None` when there was none.
    pub error: Option<f64>,
    pub reset: bool,
    /// False when this step produced no prediction.
    pub predicted: bool,
}

fn local_model(s: &SnapshotMatrix, window: WindowSpec, cfg: &LkpConfig) -> Result<KmdModel> {
    let hankel = build_hankel(s, window)?;
    let rrr = cfg.rrr();
    let mut dec = ddmd_rrr(&hankel.x().into_owned(), &hankel.y().into_owned(), &rrr)?;
    if let Some(eta) = cfg.eta {
        dec = select_modes(&dec, eta)?;
    }
    if dec.is_empty() {
        return Err(Error::Rank("no Ritz pair passed the residual filter".into()));
    }
    KmdModel::fit(&hankel, &dec, &cfg.amplitudes)
}

/// Runs local predictions for `p = k0..=kf`, each from a window ending at
/// `p - 1` and reaching `tau_l` steps ahead.
pub fn local_predict(
    s: &SnapshotMatrix,
    cfg: &LkpConfig,
    k0: usize,
    kf: usize,
) -> Result<ForecastReport> {
    cfg.validate()?;
    let min_width = cfg.n_h_min + cfg.m_h_min;
    if k0 < min_width {
        return Err(Error::Config(format!(
            "first step {k0} precedes the minimal window width {min_width}"
        )));
    }
    if kf > s.len() || k0 > kf {
        return Err(Error::Config(format!(
            "step range {k0}..={kf} does not fit {} snapshots",
            s.len()
        )));
    }

    let mut report = ForecastReport::new(s.clone());
    let (mut n_h, mut m_h) = (cfg.n_h_min, cfg.m_h_min);
    let mut grown = 0usize;
    let mut previous: Option<Vec<f64>> = None;

    for p in k0..=kf {
        let error = if p == k0 {
            Some(0.0)
        } else {
            previous
                .as_ref()
                .map(|pred| relative_error(pred, &s.snapshot_vec(p - 1)))
        };
        let reset = p > k0 && error.is_none_or(|e| !(e <= cfg.eps_ref));
        if p == k0 || reset {
            n_h = cfg.n_h_min;
            m_h = cfg.m_h_min;
            grown = 0;
        } else if cfg.max_width.is_none_or(|w| n_h + m_h < w) {
            let rows = match cfg.grow_axis {
                GrowAxis::Rows => true,
                GrowAxis::Columns => false,
                GrowAxis::Alternate => grown.is_multiple_of(2),
            };
            if rows {
                n_h += 1;
            } else {
                m_h += 1;
            }
            grown += 1;
        }

        previous = None;
        let outcome = WindowSpec::ending_at(p - 1, n_h, m_h)
            .ok_or_else(|| Error::Bounds(format!("no room for a {n_h}x{m_h} window before {p}")))
            .and_then(|window| local_model(s, window, cfg))
            .and_then(|model| model.predict_at(p, p + cfg.tau_l - 1));
        match outcome {
            Ok(values) => {
                for (lead, col) in values.column_iter().enumerate() {
                    report.predictions.push(Prediction {
                        index: p + lead,
                        lead: lead + 1,
                        values: col.iter().copied().collect(),
                        source: PredictionSource::Local,
                    });
                }
                previous = Some(values.column(0).iter().copied().collect());
            }
            Err(e) => log::debug!("local step {p} emits no prediction: {e}"),
        }
        report.local_steps.push(LocalStep {
            p,
            n_h,
            m_h,
            error,
            reset,
            predicted: previous.is_some(),
        });
    }
    report.finalize(s);
    Ok(report)
}
