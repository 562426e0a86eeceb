use serde::{Deserialize, Serialize};

use crate::rrr::SpectralRadius;
use crate::timeseries::{relative_error, SnapshotMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionSource {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Absolute time index being predicted.
    pub index: usize,
    /// Steps ahead of the last snapshot the model saw.
    pub lead: usize,
    pub values: Vec<f64>,
    pub source: PredictionSource,
}

impl Prediction {
    /// Index of the last snapshot known when the prediction was made.
    pub fn origin(&self) -> usize {
        self.index - self.lead
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub index: usize,
    pub lead: usize,
    pub source: PredictionSource,
    /// Euclidean relative error over all observables.
    pub relative: f64,
    /// `|p_i - a_i| / |a_i|` per observable.
    pub per_observable: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedInterval {
    pub t_begin: usize,
    pub t_end: usize,
    /// False when the data ended before a clean window was seen again.
    pub closed: bool,
    pub sweep: usize,
    /// Inclusive range that was overwritten with predictions, if any.
    pub retouched: Option<(usize, usize)>,
}

impl FlaggedInterval {
    pub fn contains(&self, t: usize) -> bool {
        self.t_begin <= t && t <= self.t_end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzRecord {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    /// `|alpha_j| * ||v_hat_j||`, when a model was fitted for this pair.
    pub amplitude: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpectrum {
    pub sweep: usize,
    pub window_start: usize,
    /// One past the last training index.
    pub p: usize,
    pub pairs: Vec<RitzRecord>,
    pub radius: SpectralRadius,
    pub flagged: bool,
    /// Set when the window could not be analysed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCount {
    pub sweep: usize,
    pub window_start: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    /// Sorted by `(index, lead)`; at most one entry per pair.
    pub predictions: Vec<Prediction>,
    pub errors: Vec<ErrorRecord>,
    pub flagged_intervals: Vec<FlaggedInterval>,
    pub spectrum_log: Vec<WindowSpectrum>,
    pub mode_log: Vec<ModeCount>,
    pub retouched: SnapshotMatrix,
    pub local_steps: Vec<crate::forecast::LocalStep>,
    pub sweeps: usize,
}

impl ForecastReport {
    pub(crate) fn new(data: SnapshotMatrix) -> Self {
        Self {
            predictions: Vec::new(),
            errors: Vec::new(),
            flagged_intervals: Vec::new(),
            spectrum_log: Vec::new(),
            mode_log: Vec::new(),
            retouched: data,
            local_steps: Vec::new(),
            sweeps: 0,
        }
    }

    /// The prediction with the shortest lead for `index`.
    pub fn latest(&self, index: usize) -> Option<&Prediction> {
        self.predictions
            .iter()
            .filter(|p| p.index == index)
            .min_by_key(|p| p.lead)
    }

    pub fn at(&self, index: usize, lead: usize) -> Option<&Prediction> {
        self.predictions
            .binary_search_by(|p| (p.index, p.lead).cmp(&(index, lead)))
            .ok()
            .map(|i| &self.predictions[i])
    }

    /// Sorts predictions and scores every one whose index has an actual value.
    pub(crate) fn finalize(&mut self, actual: &SnapshotMatrix) {
        self.predictions.sort_by_key(|p| (p.index, p.lead));
        self.predictions.dedup_by_key(|p| (p.index, p.lead));
        self.errors = self
            .predictions
            .iter()
            .filter(|p| p.index < actual.len())
            .map(|p| {
                let a = actual.snapshot_vec(p.index);
                ErrorRecord {
                    index: p.index,
                    lead: p.lead,
                    source: p.source,
                    relative: relative_error(&p.values, &a),
                    per_observable: p
                        .values
                        .iter()
                        .zip(&a)
                        .map(|(x, y)| relative_error(&[*x], &[*y]))
                        .collect(),
                }
            })
            .collect();
    }
}
