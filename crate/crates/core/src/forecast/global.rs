use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::local::{local_predict, LkpConfig};
use crate::forecast::report::{
    FlaggedInterval, ForecastReport, ModeCount, Prediction, PredictionSource, WindowSpectrum,
};
use crate::forecast::window::{analyze_window, WindowAnalysis};
use crate::kmd::{AmplitudeMethod, KmdModel};
use crate::rrr::{RrrConfig, SpectralRadius};
use crate::timeseries::{SnapshotMatrix, WindowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkpConfig {
    /// Active window length; must equal `n_h + m_h`.
    pub window: usize,
    pub n_h: usize,
    pub m_h: usize,
    pub rrr: RrrConfig,
    pub dp: usize,
    /// Sweeps allowed to retouch data; at most `n_rep + 1` sweeps run.
    pub n_rep: usize,
    /// Longest stretch replaced per flagged interval.
    pub l_bs: usize,
    /// Accepted band `[lo, hi]` for the spectral radius.
    pub interval: [f64; 2],
    pub tau_g: usize,
    /// Settings for the local predictor run inside flagged intervals.
    pub local: LkpConfig,
    pub amplitudes: AmplitudeMethod,
}

impl GkpConfig {
    pub fn new(n_h: usize, m_h: usize) -> Self {
        Self {
            window: n_h + m_h,
            n_h,
            m_h,
            rrr: RrrConfig::default(),
            dp: 1,
            n_rep: 1,
            l_bs: n_h + m_h,
            interval: [0.8, 1.05],
            tau_g: 1,
            local: LkpConfig::default(),
            amplitudes: AmplitudeMethod::default(),
        }
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.n_h == 0 || self.m_h == 0 || self.window != self.n_h + self.m_h {
            return Err(Error::Config(format!(
                "window {} must equal n_h + m_h with both positive ({} + {})",
                self.window, self.n_h, self.m_h
            )));
        }
        if self.dp == 0 {
            return Err(Error::Config("sliding step must be at least 1".into()));
        }
        if self.tau_g == 0 {
            return Err(Error::Config("global lead time must be at least 1".into()));
        }
        let [lo, hi] = self.interval;
        if !(lo < hi) || lo.is_nan() {
            return Err(Error::Config(format!("reference interval [{lo}, {hi}] is empty")));
        }
        if len < self.window + 1 {
            return Err(Error::Config(format!(
                "window {} needs at least {} snapshots, got {len}",
                self.window,
                self.window + 1
            )));
        }
        self.rrr.validate()?;
        self.local.validate()
    }

    fn window_at(&self, p: usize) -> WindowSpec {
        WindowSpec::new(p - self.window, self.n_h, self.m_h)
    }

    fn clean(&self, r: SpectralRadius) -> bool {
        r.within(self.interval[0], self.interval[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetouchOutcome {
    pub retouched: SnapshotMatrix,
    pub flagged_intervals: Vec<FlaggedInterval>,
    pub spectrum_log: Vec<WindowSpectrum>,
    pub sweeps: usize,
}

struct Sweep {
    predictions: Vec<Prediction>,
    intervals: Vec<FlaggedInterval>,
    spectra: Vec<WindowSpectrum>,
    modes: Vec<ModeCount>,
    retouched_any: bool,
}

fn analyze_all(
    data: &SnapshotMatrix,
    cfg: &GkpConfig,
    ps: &[usize],
    cache: &mut [Option<Result<WindowAnalysis>>],
    from: usize,
) {
    let todo: Vec<usize> = (from..ps.len()).filter(|&i| cache[i].is_none()).collect();
    let fresh: Vec<(usize, Result<WindowAnalysis>)> = todo
        .par_iter()
        .map(|&i| {
            let w = cfg.window_at(ps[i]);
            (i, analyze_window(data, w, &cfg.rrr, &cfg.amplitudes))
        })
        .collect();
    for (i, a) in fresh {
        cache[i] = Some(a);
    }
}

fn emit(model: &KmdModel, p: usize, tau: usize, out: &mut Vec<Prediction>) {
    match model.predict_at(p, p + tau - 1) {
        Ok(values) => {
            for (lead, col) in values.column_iter().enumerate() {
                out.push(Prediction {
                    index: p + lead,
                    lead: lead + 1,
                    values: col.iter().copied().collect(),
                    source: PredictionSource::Global,
                });
            }
        }
        Err(e) => log::warn!("window ending at {} cannot extrapolate: {e}", p - 1),
    }
}

fn run_sweep(
    data: &mut SnapshotMatrix,
    cfg: &GkpConfig,
    sweep: usize,
    allow_retouch: bool,
    predict: bool,
) -> Sweep {
    let ps: Vec<usize> = (cfg.window..=data.len()).step_by(cfg.dp).collect();
    let mut cache: Vec<Option<Result<WindowAnalysis>>> = vec![None; ps.len()];
    let mut out = Sweep {
        predictions: Vec::new(),
        intervals: Vec::new(),
        spectra: Vec::new(),
        modes: Vec::new(),
        retouched_any: false,
    };
    let mut open: Option<FlaggedInterval> = None;
    let mut stash: Option<KmdModel> = None;

    for i in 0..ps.len() {
        let p = ps[i];
        if cache[i].is_none() {
            analyze_all(data, cfg, &ps, &mut cache, i);
        }
        let analysis = match cache[i].take().expect("window analysed") {
            Ok(a) => a,
            Err(e) => {
                log::warn!("skipping window ending at {}: {e}", p - 1);
                out.spectra.push(WindowSpectrum {
                    sweep,
                    window_start: p - cfg.window,
                    p,
                    pairs: Vec::new(),
                    radius: SpectralRadius::Absent,
                    flagged: false,
                    failure: Some(e.to_string()),
                });
                continue;
            }
        };
        let clean = cfg.clean(analysis.radius);
        out.spectra.push(analysis.spectrum(sweep, !clean));
        out.modes.push(ModeCount {
            sweep,
            window_start: analysis.window.start,
            accepted: analysis.accepted.len(),
        });

        if !clean {
            match open.as_mut() {
                Some(iv) => iv.t_end = p,
                None => {
                    open = Some(FlaggedInterval {
                        t_begin: p.saturating_sub(cfg.dp),
                        t_end: p,
                        closed: false,
                        sweep,
                        retouched: None,
                    })
                }
            }
        } else if let Some(mut iv) = open.take() {
            iv.closed = true;
            if allow_retouch {
                match stash.as_ref() {
                    Some(model) => {
                        let hi = (iv.t_begin + cfg.l_bs).min(iv.t_end).min(data.len() - 1);
                        match retouch_range(data, model, iv.t_begin, hi) {
                            Ok(()) => {
                                iv.retouched = Some((iv.t_begin, hi));
                                out.retouched_any = true;
                                for j in i + 1..ps.len() {
                                    if cfg.window_at(ps[j]).start <= hi {
                                        cache[j] = None;
                                    }
                                }
                            }
                            Err(e) => log::warn!(
                                "could not retouch {}..={hi}: {e}",
                                iv.t_begin
                            ),
                        }
                    }
                    None => log::info!(
                        "no clean window precedes the interval starting at {}",
                        iv.t_begin
                    ),
                }
            }
            out.intervals.push(iv);
        } else {
            if let Some(model) = analysis.model {
                if predict {
                    emit(&model, p, cfg.tau_g, &mut out.predictions);
                }
                stash = Some(model);
            }
        }
    }
    if let Some(iv) = open {
        log::info!(
            "interval starting at {} is still open at the end of the data",
            iv.t_begin
        );
        out.intervals.push(iv);
    }
    out
}

fn retouch_range(data: &mut SnapshotMatrix, model: &KmdModel, lo: usize, hi: usize) -> Result<()> {
    let values = model.predict_at(lo, hi)?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("retouching values are not finite".into()));
    }
    for (c, t) in (lo..=hi).enumerate() {
        let col: Vec<f64> = values.column(c).iter().copied().collect();
        data.set_snapshot(t, &col)?;
    }
    Ok(())
}

fn sweeps(
    s: &SnapshotMatrix,
    cfg: &GkpConfig,
    predict: bool,
) -> Result<(SnapshotMatrix, ForecastReport)> {
    cfg.validate(s.len())?;
    let mut data = s.clone();
    let mut report = ForecastReport::new(s.clone());
    let mut j = 0;
    loop {
        let allow = j < cfg.n_rep;
        let sweep = run_sweep(&mut data, cfg, j, allow, predict);
        log::debug!(
            "sweep {j}: {} flagged intervals, retouched: {}",
            sweep.intervals.len(),
            sweep.retouched_any
        );
        report.flagged_intervals.extend(sweep.intervals);
        report.spectrum_log.extend(sweep.spectra);
        report.mode_log.extend(sweep.modes);
        report.predictions = sweep.predictions;
        j += 1;
        if !(allow && sweep.retouched_any) {
            break;
        }
    }
    report.sweeps = j;
    Ok((data, report))
}

/// Sliding-window global prediction with flagging and retouching.
///
/// Windows `W(p, w)` for `p = w, w + dp, ..., T` are decomposed independently;
/// the detection state machine then walks them in order. Inside intervals
/// flagged on the final sweep, predictions come from the local predictor run
/// on the original data.
pub fn global_predict(s: &SnapshotMatrix, cfg: &GkpConfig) -> Result<ForecastReport> {
    let (data, mut report) = sweeps(s, cfg, true)?;
    let last = report.sweeps - 1;
    let min_width = cfg.local.n_h_min + cfg.local.m_h_min;
    let mut local = Vec::new();
    for iv in report.flagged_intervals.iter().filter(|iv| iv.sweep == last) {
        let k0 = iv.t_begin.max(min_width);
        let kf = iv.t_end.min(s.len());
        if k0 > kf {
            continue;
        }
        let lr = local_predict(s, &cfg.local, k0, kf)?;
        local.extend(lr.predictions);
        report.local_steps.extend(lr.local_steps);
    }
    if !local.is_empty() {
        let keys: std::collections::BTreeSet<(usize, usize)> =
            local.iter().map(|p| (p.index, p.lead)).collect();
        report.predictions.retain(|p| !keys.contains(&(p.index, p.lead)));
        report.predictions.extend(local);
    }
    report.retouched = data;
    report.finalize(s);
    Ok(report)
}

/// Detection and replacement only; no predictions are emitted.
pub fn retouch(s: &SnapshotMatrix, cfg: &GkpConfig) -> Result<RetouchOutcome> {
    let (data, report) = sweeps(s, cfg, false)?;
    Ok(RetouchOutcome {
        retouched: data,
        flagged_intervals: report.flagged_intervals,
        spectrum_log: report.spectrum_log,
        sweeps: report.sweeps,
    })
}
