use rayon::prelude::*;

use crate::dmd::RitzDecomposition;
use crate::error::Result;
use crate::forecast::report::{RitzRecord, WindowSpectrum};
use crate::hankel::build_hankel;
use crate::kmd::{AmplitudeMethod, KmdModel};
use crate::rrr::{accepted_indices, ddmd_rrr, spectral_radius, RrrConfig, SpectralRadius};
use crate::timeseries::{SnapshotMatrix, WindowSpec};

/// Spectral summary of one active window.
#[derive(Debug, Clone)]
pub struct WindowAnalysis {
    pub window: WindowSpec,
    pub decomposition: RitzDecomposition,
    pub accepted: Vec<usize>,
    pub radius: SpectralRadius,
    /// Model over the accepted pairs; `None` when nothing was accepted or the
    /// amplitude fit failed.
    pub model: Option<KmdModel>,
}

impl WindowAnalysis {
    /// One past the last training index.
    pub fn p(&self) -> usize {
        self.window.end()
    }

    pub fn spectrum(&self, sweep: usize, flagged: bool) -> WindowSpectrum {
        let residuals = self.decomposition.residuals.clone().unwrap_or_default();
        let amps = self.model.as_ref().map(KmdModel::mode_amplitudes);
        let pairs = self
            .decomposition
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, lam)| {
                let pos = self.accepted.iter().position(|&a| a == i);
                RitzRecord {
                    re: lam.re,
                    im: lam.im,
                    residual: residuals.get(i).copied().unwrap_or(f64::NAN),
                    amplitude: pos.and_then(|k| amps.as_ref().map(|a| a[k])),
                    accepted: pos.is_some(),
                }
            })
            .collect();
        WindowSpectrum {
            sweep,
            window_start: self.window.start,
            p: self.p(),
            pairs,
            radius: self.radius,
            flagged,
            failure: None,
        }
    }
}

/// Hankel lift, refined decomposition, residual selection and amplitude fit
/// for one window.
pub fn analyze_window(
    s: &SnapshotMatrix,
    window: WindowSpec,
    rrr: &RrrConfig,
    amplitudes: &AmplitudeMethod,
) -> Result<WindowAnalysis> {
    let hankel = build_hankel(s, window)?;
    let x = hankel.x().into_owned();
    let y = hankel.y().into_owned();
    let decomposition = ddmd_rrr(&x, &y, rrr)?;
    let accepted = accepted_indices(&decomposition, rrr.eta)?;
    let selected = decomposition.subset(&accepted);
    let radius = spectral_radius(&selected);
    let model = if selected.is_empty() {
        None
    } else {
        match KmdModel::fit(&hankel, &selected, amplitudes) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("amplitude fit failed for window at {}: {e}", window.start);
                None
            }
        }
    };
    Ok(WindowAnalysis {
        window,
        decomposition,
        accepted,
        radius,
        model,
    })
}

/// Spectrum of every window `p = w, w + dp, ...` without detection. Amplitudes
/// are fitted over all pairs of each window so rejected pairs get one too.
pub fn spectrum_scan(
    s: &SnapshotMatrix,
    n_h: usize,
    m_h: usize,
    dp: usize,
    rrr: &RrrConfig,
) -> Result<Vec<WindowSpectrum>> {
    let w = n_h + m_h;
    if dp == 0 || w > s.len() {
        return Err(crate::Error::Config(format!(
            "window {w} with step {dp} does not fit {} snapshots",
            s.len()
        )));
    }
    let starts: Vec<usize> = (0..=(s.len() - w)).step_by(dp).collect();
    starts
        .par_iter()
        .map(|&b| {
            let window = WindowSpec::new(b, n_h, m_h);
            let hankel = build_hankel(s, window)?;
            let dec = ddmd_rrr(&hankel.x().into_owned(), &hankel.y().into_owned(), rrr);
            let dec = match dec {
                Ok(d) => d,
                Err(e) => {
                    return Ok(WindowSpectrum {
                        sweep: 0,
                        window_start: b,
                        p: window.end(),
                        pairs: Vec::new(),
                        radius: SpectralRadius::Absent,
                        flagged: true,
                        failure: Some(e.to_string()),
                    })
                }
            };
            let accepted = accepted_indices(&dec, rrr.eta)?;
            let radius = spectral_radius(&dec.subset(&accepted));
            let amps = KmdModel::fit(&hankel, &dec, &AmplitudeMethod::default())
                .map(|m| m.mode_amplitudes())
                .ok();
            let residuals = dec.residuals.clone().unwrap_or_default();
            let pairs = dec
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, lam)| RitzRecord {
                    re: lam.re,
                    im: lam.im,
                    residual: residuals[i],
                    amplitude: amps.as_ref().map(|a| a[i]),
                    accepted: accepted.contains(&i),
                })
                .collect();
            Ok(WindowSpectrum {
                sweep: 0,
                window_start: b,
                p: window.end(),
                pairs,
                radius,
                flagged: false,
                failure: None,
            })
        })
        .collect()
}
