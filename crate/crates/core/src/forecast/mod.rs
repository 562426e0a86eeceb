//! Sliding-window forecasting.
//!
//! [`global_predict`] slides a fixed-size training window over the data,
//! flags windows whose accepted Ritz spectrum leaves a reference band for the
//! spectral radius, and retouches the flagged stretch with predictions from
//! the last clean window. [`local_predict`] runs short-reach forecasts with a
//! Hankel matrix that grows while one-step errors stay small and restarts at
//! its minimal size when they do not.

mod global;
mod local;
mod report;
mod window;

pub use global::{global_predict, retouch, GkpConfig, RetouchOutcome};
pub use local::{local_predict, GrowAxis, LkpConfig, LocalStep};
pub use report::{
    ErrorRecord, FlaggedInterval, ForecastReport, ModeCount, Prediction, PredictionSource,
    RitzRecord, WindowSpectrum,
};
pub use window::{analyze_window, spectrum_scan, WindowAnalysis};
