use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kf_core::generators::DisturbanceKind;
use kf_core::timeseries::MissingPolicy;
use kf_core::GrowAxis;

#[derive(Debug, Parser)]
#[command(
    name = "kf",
    version,
    about = "Koopman mode decomposition forecasting with disturbance detection",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    /// Worker threads for window analysis; KF_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Directory receiving the output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Re-run the job recorded in a manifest.json.
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sliding-window global prediction with Black Swan detection.
    ForecastGlobal(GlobalArgs),
    /// Local prediction with an adaptively sized Hankel matrix.
    ForecastLocal(LocalArgs),
    /// Ritz spectrum of every sliding window.
    Spectrum(SpectrumArgs),
    /// Detection and replacement of disturbed data only.
    Retouch(RetouchArgs),
    /// Synthetic data.
    #[command(subcommand)]
    Generate(GenerateCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub n_h: usize,
    pub m_h: usize,
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected NxM, got '{s}'"))?;
        let n_h = a.trim().parse().map_err(|_| format!("bad row count in '{s}'"))?;
        let m_h = b.trim().parse().map_err(|_| format!("bad column count in '{s}'"))?;
        if n_h == 0 || m_h == 0 {
            return Err(format!("both parts of '{s}' must be positive"));
        }
        Ok(Split { n_h, m_h })
    }
}

/// Comma-separated list of exactly `N` finite numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuple<const N: usize>(pub [f64; N]);

impl<const N: usize> FromStr for Tuple<N> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != N {
            return Err(format!("expected {N} comma-separated numbers, got '{s}'"));
        }
        let mut out = [0.0; N];
        for (slot, p) in out.iter_mut().zip(parts) {
            *slot = finite(p.trim())?;
        }
        Ok(Tuple(out))
    }
}

pub fn finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("'{s}' must be positive"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Amplitudes {
    Exact,
    LeastSquares,
    Recent(usize),
}

impl FromStr for Amplitudes {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Amplitudes::Exact),
            "ls" => Ok(Amplitudes::LeastSquares),
            _ => match s.strip_prefix("recent:").map(str::parse::<usize>) {
                Some(Ok(n)) if n > 0 => Ok(Amplitudes::Recent(n)),
                _ => Err(format!("expected exact, ls or recent:N, got '{s}'")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Missing {
    Reject,
    ForwardFill,
}

impl From<Missing> for MissingPolicy {
    fn from(m: Missing) -> Self {
        match m {
            Missing::Reject => MissingPolicy::Reject,
            Missing::ForwardFill => MissingPolicy::ForwardFill,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Axis {
    Rows,
    Columns,
    Alternate,
}

impl From<Axis> for GrowAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Rows => GrowAxis::Rows,
            Axis::Columns => GrowAxis::Columns,
            Axis::Alternate => GrowAxis::Alternate,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    Step,
    Spike,
    Ramp,
}

impl From<Kind> for DisturbanceKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Step => DisturbanceKind::Step,
            Kind::Spike => DisturbanceKind::Spike,
            Kind::Ramp => DisturbanceKind::Ramp,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file of snapshots.
    #[arg(long, short)]
    pub input: PathBuf,

    #[arg(long, default_value_t = ',')]
    pub delimiter: char,

    /// The first row holds data rather than labels.
    #[arg(long)]
    pub no_header: bool,

    /// The first column holds timestamps (or observable names with
    /// --observables-as-rows).
    #[arg(long)]
    pub label_column: bool,

    /// Each CSV row is one observable instead of one time step.
    #[arg(long)]
    pub observables_as_rows: bool,

    #[arg(long, value_enum, default_value = "forward-fill")]
    pub missing: Missing,

    /// Uniform time step recorded with the data.
    #[arg(long, value_parser = positive)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Hankel split n_H x m_H in time steps.
    #[arg(long)]
    pub hankel: Split,

    /// Active window length; must equal n_H + m_H when given.
    #[arg(long)]
    pub window: Option<usize>,

    /// Residual threshold for accepting Ritz pairs.
    #[arg(long, default_value_t = kf_core::rrr::DEFAULT_ETA, value_parser = positive)]
    pub eta: f64,

    /// Relative singular value cutoff for the numerical rank.
    #[arg(long, default_value_t = kf_core::dmd::DEFAULT_EPSILON, value_parser = positive)]
    pub epsilon: f64,

    /// Sliding step between windows.
    #[arg(long, default_value_t = 1)]
    pub dp: usize,
}

#[derive(Debug, Args)]
pub struct GkpArgs {
    #[command(flatten)]
    pub window: WindowArgs,

    /// Sweeps allowed to retouch data.
    #[arg(long, default_value_t = 1)]
    pub n_rep: usize,

    /// Longest stretch replaced per flagged interval (default: the window).
    #[arg(long)]
    pub l_bs: Option<usize>,

    /// Accepted band LO,HI for the spectral radius.
    #[arg(long, default_value = "0.8,1.05")]
    pub interval: Tuple<2>,

    /// Global lead time.
    #[arg(long, default_value_t = 1)]
    pub lead: usize,

    /// Amplitude fit: exact, ls or recent:N.
    #[arg(long, default_value = "ls")]
    pub amplitudes: Amplitudes,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub gkp: GkpArgs,

    /// Minimal Hankel split for local prediction inside flagged intervals.
    #[arg(long, default_value = "3x2")]
    pub min_hankel: Split,

    /// Relative error that restarts the local Hankel matrix.
    #[arg(long, default_value_t = 0.005, value_parser = positive)]
    pub eps_ref: f64,

    /// Local lead time.
    #[arg(long, default_value_t = 1)]
    pub local_lead: usize,

    #[arg(long, value_enum, default_value = "alternate")]
    pub local_grow_axis: Axis,

    /// Residual threshold for local prediction (default: keep all pairs).
    #[arg(long, value_parser = positive)]
    pub local_eta: Option<f64>,

    /// Largest local window width.
    #[arg(long)]
    pub local_max_width: Option<usize>,

    /// Write negative predictions as zero.
    #[arg(long)]
    pub clamp_nonnegative: bool,
}

#[derive(Debug, Args)]
pub struct LocalArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, default_value = "3x2")]
    pub min_hankel: Split,

    #[arg(long, default_value_t = 0.005, value_parser = positive)]
    pub eps_ref: f64,

    #[arg(long, default_value_t = 1)]
    pub lead: usize,

    #[arg(long, value_enum, default_value = "alternate")]
    pub grow_axis: Axis,

    /// Residual threshold (default: keep all pairs).
    #[arg(long, value_parser = positive)]
    pub eta: Option<f64>,

    #[arg(long, default_value_t = kf_core::dmd::DEFAULT_EPSILON, value_parser = positive)]
    pub epsilon: f64,

    #[arg(long)]
    pub max_width: Option<usize>,

    /// First predicted index (default: the minimal window width).
    #[arg(long)]
    pub start: Option<usize>,

    /// Last step, at most the series length (default: the series length).
    #[arg(long)]
    pub end: Option<usize>,

    #[arg(long, default_value = "ls")]
    pub amplitudes: Amplitudes,

    #[arg(long)]
    pub clamp_nonnegative: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct RetouchArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub gkp: GkpArgs,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Lorenz trajectory (x, y, z).
    Lorenz {
        #[arg(long, default_value_t = 10.0, value_parser = finite)]
        sigma: f64,
        #[arg(long, default_value_t = 28.0, value_parser = finite)]
        rho: f64,
        #[arg(long, default_value_t = 8.0 / 3.0, value_parser = finite)]
        beta: f64,
        #[arg(long, default_value_t = 0.01, value_parser = positive)]
        dt: f64,
        #[arg(long, default_value = "1,1,1")]
        x0: Tuple<3>,
        /// Stored states, including the initial one.
        #[arg(long)]
        steps: usize,
        /// RK4 steps per stored sample.
        #[arg(long, default_value_t = 1)]
        substeps: usize,
    },
    /// Scalar signal sum_j alpha_j lambda_j^k; complex terms get their
    /// conjugate added.
    Kmd {
        /// MODULUS,ANGLE,AMPLITUDE,PHASE of one eigenvalue and amplitude.
        #[arg(long = "mode", required = true)]
        modes: Vec<Tuple<4>>,
        #[arg(long)]
        steps: usize,
    },
    /// offset + sum_i a_i sin(omega_i k + phi_i), optionally disturbed.
    Sinusoids {
        /// AMPLITUDE,OMEGA,PHASE of one component.
        #[arg(long = "component", required = true)]
        components: Vec<Tuple<3>>,
        #[arg(long, default_value_t = 0.0, value_parser = finite)]
        offset: f64,
        #[arg(long)]
        steps: usize,
        /// Index where an additive disturbance starts.
        #[arg(long, requires_all = ["disturb_length", "magnitude"])]
        disturb_at: Option<usize>,
        #[arg(long)]
        disturb_length: Option<usize>,
        #[arg(long, value_enum, default_value = "step")]
        disturb_kind: Kind,
        #[arg(long, value_parser = finite)]
        magnitude: Option<f64>,
    },
}
