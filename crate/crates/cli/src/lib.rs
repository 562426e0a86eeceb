//! Command-line frontend for `kf-core`.
//!
//! Every run writes its outputs plus a `manifest.json` into the output
//! directory. Passing that manifest back with `--manifest` repeats the run.

pub mod args;
pub mod manifest;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use kf_core::forecast::spectrum_scan;
use kf_core::generators::{
    inject_disturbance, lorenz_simulate_substeps, scalar_modal_signal, sinusoids,
};
use kf_core::{global_predict, load_csv, local_predict, retouch, ErrorClass, SnapshotMatrix, C64};

use crate::args::Cli;
use crate::manifest::{Generator, InputSpec, Job, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("cannot write {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] kf_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Manifest { .. } => EXIT_CONFIG,
            CliError::Output { .. } => EXIT_DATA,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => EXIT_CONFIG,
                ErrorClass::Data => EXIT_DATA,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            },
        }
    }
}

/// Parses `argv` (program name first), runs the job and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match dispatch(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("KF_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("KF_THREADS must be a positive integer, got '{v}'"))),
        _ => match flag {
            Some(0) => Err(CliError::Usage("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let job = match (cli.manifest, cli.command) {
        (Some(path), None) => RunManifest::load(&path)?.job,
        (None, Some(cmd)) => Job::from_command(cmd)?,
        _ => {
            return Err(CliError::Usage(
                "give either a subcommand or --manifest (see --help)".into(),
            ))
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::Output {
        path: cli.out.clone(),
        message: e.to_string(),
    })?;
    pool.install(|| execute(job, &cli.out))
}

fn load(input: &InputSpec) -> Result<SnapshotMatrix, CliError> {
    Ok(load_csv(&input.path, &input.ingest)?)
}

/// Runs `job`, writing its outputs and manifest into `out`.
pub fn execute(mut job: Job, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<&str> = Vec::new();
    let mut lifted_rows = None;
    let path = |name: &str| out.join(name);

    match &mut job {
        Job::ForecastGlobal {
            input,
            config,
            clamp_nonnegative,
        } => {
            let s = load(input)?;
            let report = global_predict(&s, config)?;
            let labels = output::labels(&s);
            lifted_rows = Some(s.d() * config.n_h);
            output::predictions(&path("predictions.csv"), &labels, &report.predictions, *clamp_nonnegative)?;
            output::errors(&path("errors.csv"), &labels, &report.errors)?;
            output::spectrum(&path("spectrum.csv"), &report.spectrum_log)?;
            output::windows(&path("windows.csv"), &report.spectrum_log)?;
            output::flags(&path("flags.json"), &report.flagged_intervals)?;
            output::series(&path("retouched.csv"), &report.retouched)?;
            files.extend([
                "predictions.csv",
                "errors.csv",
                "spectrum.csv",
                "windows.csv",
                "flags.json",
                "retouched.csv",
            ]);
        }
        Job::ForecastLocal {
            input,
            config,
            start,
            end,
            clamp_nonnegative,
        } => {
            let s = load(input)?;
            let k0 = *start.get_or_insert(config.n_h_min + config.m_h_min);
            let kf = *end.get_or_insert(s.len());
            let report = local_predict(&s, config, k0, kf)?;
            let labels = output::labels(&s);
            output::predictions(&path("predictions.csv"), &labels, &report.predictions, *clamp_nonnegative)?;
            output::errors(&path("errors.csv"), &labels, &report.errors)?;
            output::local_steps(&path("steps.csv"), &report.local_steps)?;
            files.extend(["predictions.csv", "errors.csv", "steps.csv"]);
        }
        Job::Spectrum {
            input,
            n_h,
            m_h,
            dp,
            rrr,
        } => {
            let s = load(input)?;
            let log = spectrum_scan(&s, *n_h, *m_h, *dp, rrr)?;
            lifted_rows = Some(s.d() * *n_h);
            output::spectrum(&path("spectrum.csv"), &log)?;
            output::windows(&path("windows.csv"), &log)?;
            files.extend(["spectrum.csv", "windows.csv"]);
        }
        Job::Retouch { input, config } => {
            let s = load(input)?;
            let outcome = retouch(&s, config)?;
            lifted_rows = Some(s.d() * config.n_h);
            output::series(&path("retouched.csv"), &outcome.retouched)?;
            output::flags(&path("flags.json"), &outcome.flagged_intervals)?;
            output::spectrum(&path("spectrum.csv"), &outcome.spectrum_log)?;
            output::windows(&path("windows.csv"), &outcome.spectrum_log)?;
            files.extend(["retouched.csv", "flags.json", "spectrum.csv", "windows.csv"]);
        }
        Job::Generate { generator } => {
            let s = generate(generator)?;
            output::series(&path("series.csv"), &s)?;
            files.push("series.csv");
        }
    }

    let mut manifest = RunManifest::new(job);
    manifest.lifted_rows = lifted_rows;
    manifest.outputs = files.iter().map(|f| f.to_string()).collect();
    output::write_json(&path("manifest.json"), &manifest)?;
    files.push("manifest.json");
    Ok(files.into_iter().map(path).collect())
}

fn generate(g: &Generator) -> Result<SnapshotMatrix, CliError> {
    let single = |s: SnapshotMatrix| s.with_labels(vec!["f".into()]);
    let s = match g {
        Generator::Lorenz {
            params,
            steps,
            substeps,
        } => lorenz_simulate_substeps(params, *steps, *substeps)?,
        Generator::Kmd { modes, steps } => {
            let terms: Vec<(C64, C64)> = modes
                .iter()
                .map(|m| {
                    (
                        C64::from_polar(m.modulus, m.angle),
                        C64::from_polar(m.amplitude, m.phase),
                    )
                })
                .collect();
            single(scalar_modal_signal(&terms, *steps)?)?
        }
        Generator::Sinusoids {
            components,
            offset,
            steps,
            disturbance,
        } => {
            let comps: Vec<(f64, f64, f64)> = components.iter().map(|c| (c[0], c[1], c[2])).collect();
            let mut s = sinusoids(&comps, *offset, *steps)?;
            if let Some(d) = disturbance {
                s = inject_disturbance(&s, d.start, d.length, d.kind, d.magnitude)?;
            }
            single(s)?
        }
    };
    Ok(s)
}
