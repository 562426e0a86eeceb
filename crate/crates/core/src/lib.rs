//! Koopman mode decomposition forecasting.
//!
//! Snapshots are lifted into block-Hankel matrices, Ritz pairs are extracted
//! with residual bounds, and the pairs that pass a residual threshold drive
//! spectral extrapolation. Sliding the training window and watching the
//! spectral radius of the accepted pairs flags disturbances ("Black Swan"
//! events), whose data can then be retouched with predictions from the last
//! clean window.

pub mod dmd;
pub mod error;
pub mod forecast;
pub mod generators;
pub mod hankel;
pub mod kmd;
pub mod linalg;
pub mod rrr;
pub mod timeseries;

pub use dmd::{dmd, truncated_svd, RitzDecomposition, RitzMethod, TruncatedSvd};
pub use error::{Error, ErrorClass, Result};
pub use forecast::{
    global_predict, local_predict, retouch, ForecastReport, GkpConfig, GrowAxis, LkpConfig,
};
pub use hankel::{build_hankel, extract_tail, HankelMatrix};
pub use kmd::{fit_amplitudes_exact, fit_amplitudes_wls, AmplitudeMethod, KmdModel, WeightSpec};
pub use linalg::C64;
pub use rrr::{ddmd_rrr, select_modes, spectral_radius, RrrConfig, SpectralRadius};
pub use timeseries::{load_csv, relative_error, IngestConfig, SnapshotMatrix, WindowSpec};
