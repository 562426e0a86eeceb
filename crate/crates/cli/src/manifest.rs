use std::path::{Path, PathBuf};

use kf_core::generators::{DisturbanceKind, LorenzParams};
use kf_core::kmd::FORGETTING_FLOOR;
use kf_core::timeseries::Orientation;
use kf_core::{AmplitudeMethod, GkpConfig, IngestConfig, LkpConfig, RrrConfig, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::args::{
    Amplitudes, Command, GenerateCommand, GkpArgs, GlobalArgs, InputArgs, LocalArgs,
    SpectrumArgs, WindowArgs,
};
use crate::CliError;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub job: Job,
    /// `d * n_H` of the global window, once the data is known.
    pub lifted_rows: Option<usize>,
    /// Output file names, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(job: Job) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            job,
            lifted_rows: None,
            outputs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    pub path: PathBuf,
    pub ingest: IngestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Job {
    ForecastGlobal {
        input: InputSpec,
        config: GkpConfig,
        clamp_nonnegative: bool,
    },
    ForecastLocal {
        input: InputSpec,
        config: LkpConfig,
        start: Option<usize>,
        end: Option<usize>,
        clamp_nonnegative: bool,
    },
    Spectrum {
        input: InputSpec,
        n_h: usize,
        m_h: usize,
        dp: usize,
        rrr: RrrConfig,
    },
    Retouch {
        input: InputSpec,
        config: GkpConfig,
    },
    Generate {
        generator: Generator,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModalTerm {
    pub modulus: f64,
    pub angle: f64,
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub start: usize,
    pub length: usize,
    pub kind: DisturbanceKind,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    Lorenz {
        params: LorenzParams,
        steps: usize,
        substeps: usize,
    },
    Kmd {
        modes: Vec<ModalTerm>,
        steps: usize,
    },
    Sinusoids {
        /// `(amplitude, omega, phase)` per component.
        components: Vec<[f64; 3]>,
        offset: f64,
        steps: usize,
        disturbance: Option<Disturbance>,
    },
}

fn input_spec(a: InputArgs) -> Result<InputSpec, CliError> {
    if !a.delimiter.is_ascii() {
        return Err(CliError::Usage(format!(
            "delimiter '{}' must be a single ASCII character",
            a.delimiter
        )));
    }
    Ok(InputSpec {
        path: a.input,
        ingest: IngestConfig {
            delimiter: a.delimiter as u8,
            has_header: !a.no_header,
            label_column: a.label_column,
            orientation: if a.observables_as_rows {
                Orientation::RowsAreObservables
            } else {
                Orientation::RowsAreTime
            },
            missing: a.missing.into(),
            dt: a.dt,
        },
    })
}

fn amplitude_method(a: Amplitudes) -> AmplitudeMethod {
    match a {
        Amplitudes::Exact => AmplitudeMethod::Exact,
        Amplitudes::LeastSquares => AmplitudeMethod::LeastSquares {
            weights: WeightSpec::uniform(),
        },
        Amplitudes::Recent(recent) => AmplitudeMethod::FavorRecent {
            recent,
            floor: FORGETTING_FLOOR,
        },
    }
}

fn checked_split(w: &WindowArgs) -> Result<(usize, usize), CliError> {
    let (n_h, m_h) = (w.hankel.n_h, w.hankel.m_h);
    if let Some(window) = w.window {
        if window != n_h + m_h {
            return Err(CliError::Usage(format!(
                "--window {window} does not match --hankel {n_h}x{m_h}"
            )));
        }
    }
    Ok((n_h, m_h))
}

fn gkp_config(a: GkpArgs) -> Result<GkpConfig, CliError> {
    let (n_h, m_h) = checked_split(&a.window)?;
    let mut cfg = GkpConfig::new(n_h, m_h);
    cfg.rrr = RrrConfig {
        epsilon: a.window.epsilon,
        eta: a.window.eta,
    };
    cfg.dp = a.window.dp;
    cfg.n_rep = a.n_rep;
    if let Some(l) = a.l_bs {
        cfg.l_bs = l;
    }
    cfg.interval = a.interval.0;
    cfg.tau_g = a.lead;
    cfg.amplitudes = amplitude_method(a.amplitudes);
    Ok(cfg)
}

fn global_job(a: GlobalArgs) -> Result<Job, CliError> {
    let mut config = gkp_config(a.gkp)?;
    config.local = LkpConfig {
        n_h_min: a.min_hankel.n_h,
        m_h_min: a.min_hankel.m_h,
        eps_ref: a.eps_ref,
        tau_l: a.local_lead,
        grow_axis: a.local_grow_axis.into(),
        epsilon: config.rrr.epsilon,
        eta: a.local_eta,
        max_width: a.local_max_width,
        amplitudes: config.amplitudes.clone(),
    };
    Ok(Job::ForecastGlobal {
        input: input_spec(a.input)?,
        config,
        clamp_nonnegative: a.clamp_nonnegative,
    })
}

fn local_job(a: LocalArgs) -> Result<Job, CliError> {
    Ok(Job::ForecastLocal {
        input: input_spec(a.input)?,
        config: LkpConfig {
            n_h_min: a.min_hankel.n_h,
            m_h_min: a.min_hankel.m_h,
            eps_ref: a.eps_ref,
            tau_l: a.lead,
            grow_axis: a.grow_axis.into(),
            epsilon: a.epsilon,
            eta: a.eta,
            max_width: a.max_width,
            amplitudes: amplitude_method(a.amplitudes),
        },
        start: a.start,
        end: a.end,
        clamp_nonnegative: a.clamp_nonnegative,
    })
}

fn spectrum_job(a: SpectrumArgs) -> Result<Job, CliError> {
    let (n_h, m_h) = checked_split(&a.window)?;
    Ok(Job::Spectrum {
        input: input_spec(a.input)?,
        n_h,
        m_h,
        dp: a.window.dp,
        rrr: RrrConfig {
            epsilon: a.window.epsilon,
            eta: a.window.eta,
        },
    })
}

fn generate_job(g: GenerateCommand) -> Result<Job, CliError> {
    let generator = match g {
        GenerateCommand::Lorenz {
            sigma,
            rho,
            beta,
            dt,
            x0,
            steps,
            substeps,
        } => Generator::Lorenz {
            params: LorenzParams {
                sigma,
                rho,
                beta,
                dt,
                x0: x0.0,
            },
            steps,
            substeps,
        },
        GenerateCommand::Kmd { modes, steps } => Generator::Kmd {
            modes: modes
                .into_iter()
                .map(|t| ModalTerm {
                    modulus: t.0[0],
                    angle: t.0[1],
                    amplitude: t.0[2],
                    phase: t.0[3],
                })
                .collect(),
            steps,
        },
        GenerateCommand::Sinusoids {
            components,
            offset,
            steps,
            disturb_at,
            disturb_length,
            disturb_kind,
            magnitude,
        } => Generator::Sinusoids {
            components: components.into_iter().map(|t| t.0).collect(),
            offset,
            steps,
            disturbance: match (disturb_at, disturb_length, magnitude) {
                (Some(start), Some(length), Some(magnitude)) => Some(Disturbance {
                    start,
                    length,
                    kind: disturb_kind.into(),
                    magnitude,
                }),
                _ => None,
            },
        },
    };
    Ok(Job::Generate { generator })
}

impl Job {
    pub fn from_command(c: Command) -> Result<Self, CliError> {
        match c {
            Command::ForecastGlobal(a) => global_job(a),
            Command::ForecastLocal(a) => local_job(a),
            Command::Spectrum(a) => spectrum_job(a),
            Command::Retouch(a) => Ok(Job::Retouch {
                input: input_spec(a.input)?,
                config: gkp_config(a.gkp)?,
            }),
            Command::Generate(g) => generate_job(g),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Job::ForecastGlobal { .. } => "forecast-global",
            Job::ForecastLocal { .. } => "forecast-local",
            Job::Spectrum { .. } => "spectrum",
            Job::Retouch { .. } => "retouch",
            Job::Generate { .. } => "generate",
        }
    }
}
