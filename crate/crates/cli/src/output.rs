use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kf_core::forecast::{ErrorRecord, FlaggedInterval, LocalStep, Prediction, WindowSpectrum};
use kf_core::timeseries::format_f64;
use kf_core::{SnapshotMatrix, SpectralRadius};
use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_table(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn labels(s: &SnapshotMatrix) -> Vec<String> {
    match s.labels() {
        Some(l) => l.to_vec(),
        None => (0..s.d()).map(|i| format!("f{i}")).collect(),
    }
}

fn source(p: kf_core::forecast::PredictionSource) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn predictions(path: &Path, labels: &[String], preds: &[Prediction], clamp: bool) -> Result<(), CliError> {
    let mut header = vec!["index".to_string(), "lead".into(), "source".into()];
    header.extend(labels.iter().cloned());
    let rows = preds.iter().map(|p| {
        let mut row = vec![p.index.to_string(), p.lead.to_string(), source(p.source)];
        row.extend(p.values.iter().map(|&v| {
            let v = if clamp && v < 0.0 { 0.0 } else { v };
            format_f64(v)
        }));
        row
    });
    write_table(path, &header, rows)
}

pub fn errors(path: &Path, labels: &[String], errs: &[ErrorRecord]) -> Result<(), CliError> {
    let mut header = vec!["index".to_string(), "lead".into(), "source".into(), "relative".into()];
    header.extend(labels.iter().cloned());
    let rows = errs.iter().map(|e| {
        let mut row = vec![
            e.index.to_string(),
            e.lead.to_string(),
            source(e.source),
            format_f64(e.relative),
        ];
        row.extend(e.per_observable.iter().map(|v| format_f64(*v)));
        row
    });
    write_table(path, &header, rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

/// One row per Ritz pair.
pub fn spectrum(path: &Path, log: &[WindowSpectrum]) -> Result<(), CliError> {
    let header: Vec<String> = ["sweep", "window_start", "p", "re", "im", "residual", "amplitude", "accepted"]
        .map(String::from)
        .to_vec();
    let rows = log.iter().flat_map(|w| {
        w.pairs.iter().map(move |r| {
            vec![
                w.sweep.to_string(),
                w.window_start.to_string(),
                w.p.to_string(),
                format_f64(r.re),
                format_f64(r.im),
                format_f64(r.residual),
                opt(r.amplitude),
                r.accepted.to_string(),
            ]
        })
    });
    write_table(path, &header, rows)
}

/// One row per window.
pub fn windows(path: &Path, log: &[WindowSpectrum]) -> Result<(), CliError> {
    let header: Vec<String> = ["sweep", "window_start", "p", "radius", "pairs", "accepted", "flagged", "failure"]
        .map(String::from)
        .to_vec();
    let rows = log.iter().map(|w| {
        let radius = match w.radius {
            SpectralRadius::Finite(r) => format_f64(r),
            SpectralRadius::Absent => "inf".to_string(),
        };
        vec![
            w.sweep.to_string(),
            w.window_start.to_string(),
            w.p.to_string(),
            radius,
            w.pairs.len().to_string(),
            w.pairs.iter().filter(|r| r.accepted).count().to_string(),
            w.flagged.to_string(),
            w.failure.clone().unwrap_or_default(),
        ]
    });
    write_table(path, &header, rows)
}

pub fn local_steps(path: &Path, steps: &[LocalStep]) -> Result<(), CliError> {
    let header: Vec<String> = ["p", "n_h", "m_h", "error", "reset", "predicted"]
        .map(String::from)
        .to_vec();
    let rows = steps.iter().map(|s| {
        vec![
            s.p.to_string(),
            s.n_h.to_string(),
            s.m_h.to_string(),
            opt(s.error),
            s.reset.to_string(),
            s.predicted.to_string(),
        ]
    });
    write_table(path, &header, rows)
}

pub fn flags(path: &Path, intervals: &[FlaggedInterval]) -> Result<(), CliError> {
    write_json(path, &intervals)
}

pub fn series(path: &Path, s: &SnapshotMatrix) -> Result<(), CliError> {
    kf_core::timeseries::save_csv(path, s).map_err(CliError::from)
}
