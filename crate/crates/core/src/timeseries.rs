//! Snapshot sequences, CSV ingestion and the relative error metric.
//!
//! A [`SnapshotMatrix`] stores `d` observables over `T` time steps as a
//! `d x T` matrix; column `k` is the observable vector at time index `k`.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    values: DMatrix<f64>,
    labels: Option<Vec<String>>,
    timestamps: Option<Vec<String>>,
    dt: Option<f64>,
}

impl SnapshotMatrix {
    /// Wraps a `d x T` matrix. Requires `d >= 1`, `T >= 2` and finite entries.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(Error::Shape("snapshot matrix needs at least one observable".into()));
        }
        if values.ncols() < 2 {
            return Err(Error::Shape(format!(
                "snapshot matrix needs at least two time steps, got {}",
                values.ncols()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (i % values.nrows(), i / values.nrows());
            return Err(Error::Shape(format!(
                "non-finite value at observable {r}, time index {c}"
            )));
        }
        Ok(Self {
            values,
            labels: None,
            timestamps: None,
            dt: None,
        })
    }

    /// Builds a matrix from per-time-step rows (`rows[k]` is `f_k`).
    pub fn from_time_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged time rows".into()));
        }
        Self::new(DMatrix::from_fn(d, t, |i, k| rows[k][i]))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.d() {
            return Err(Error::Shape(format!(
                "{} labels for {} observables",
                labels.len(),
                self.d()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_timestamps(mut self, timestamps: Vec<String>) -> Result<Self> {
        if timestamps.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} timestamps for {} time steps",
                timestamps.len(),
                self.len()
            )));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    /// Number of observables.
    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn dt(&self) -> Option<f64> {
        self.dt
    }

    pub fn snapshot(&self, k: usize) -> DVector<f64> {
        self.values.column(k).into_owned()
    }

    pub fn snapshot_vec(&self, k: usize) -> Vec<f64> {
        self.values.column(k).iter().copied().collect()
    }

    /// Replaces snapshot `k`. The new value must be finite.
    pub fn set_snapshot(&mut self, k: usize, value: &[f64]) -> Result<()> {
        if k >= self.len() {
            return Err(Error::Bounds(format!("time index {k} >= {}", self.len())));
        }
        if value.len() != self.d() {
            return Err(Error::Shape(format!(
                "snapshot of length {} for d = {}",
                value.len(),
                self.d()
            )));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite replacement at time index {k}"
            )));
        }
        for (i, v) in value.iter().enumerate() {
            self.values[(i, k)] = *v;
        }
        Ok(())
    }

    /// Keeps time steps `start..end`.
    pub fn time_slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::Bounds(format!(
                "time slice {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        let mut out = Self::new(self.values.columns(start, end - start).into_owned())?;
        out.labels = self.labels.clone();
        out.timestamps = self.timestamps.as_ref().map(|t| t[start..end].to_vec());
        out.dt = self.dt;
        Ok(out)
    }

    /// Keeps a single observable row.
    pub fn observable(&self, i: usize) -> Result<Self> {
        if i >= self.d() {
            return Err(Error::Bounds(format!("observable {i} >= {}", self.d())));
        }
        let mut out = Self::new(self.values.rows(i, 1).into_owned())?;
        out.labels = self.labels.as_ref().map(|l| vec![l[i].clone()]);
        out.timestamps = self.timestamps.clone();
        out.dt = self.dt;
        Ok(out)
    }
}

/// Active training window: snapshots `start .. start + n_h + m_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub start: usize,
    pub n_h: usize,
    pub m_h: usize,
}

impl WindowSpec {
    pub fn new(start: usize, n_h: usize, m_h: usize) -> Self {
        Self { start, n_h, m_h }
    }

    /// Window ending at `present` (inclusive), i.e. the last known snapshot.
    pub fn ending_at(present: usize, n_h: usize, m_h: usize) -> Option<Self> {
        (present + 1)
            .checked_sub(n_h + m_h)
            .map(|start| Self { start, n_h, m_h })
    }

    pub fn width(&self) -> usize {
        self.n_h + self.m_h
    }

    /// One past the last snapshot consumed.
    pub fn end(&self) -> usize {
        self.start + self.width()
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if self.n_h == 0 || self.m_h == 0 {
            return Err(Error::Config(format!(
                "Hankel split {}x{} must be positive",
                self.n_h, self.m_h
            )));
        }
        if self.end() > len {
            return Err(Error::Bounds(format!(
                "window {}..{} exceeds {} snapshots",
                self.start,
                self.end(),
                len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Each CSV row is one time step.
    #[default]
    RowsAreTime,
    /// Each CSV row is one observable.
    RowsAreObservables,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    Reject,
    /// Repeat the last observed value of the same observable.
    #[default]
    ForwardFill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub delimiter: u8,
    pub has_header: bool,
    /// The first column carries labels rather than numbers: timestamps when
    /// rows are time steps, observable names otherwise.
    pub label_column: bool,
    pub orientation: Orientation,
    pub missing: MissingPolicy,
    pub dt: Option<f64>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            label_column: false,
            orientation: Orientation::RowsAreTime,
            missing: MissingPolicy::ForwardFill,
            dt: None,
        }
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NaN" | "nan" | "NA" | "na" | "N/A" | "null")
}

pub fn load_csv(path: impl AsRef<Path>, config: &IngestConfig) -> Result<SnapshotMatrix> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, config)
}

pub fn read_csv<R: Read>(reader: R, config: &IngestConfig) -> Result<SnapshotMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(config.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut row_labels = Vec::new();
    // Parsed body, NaN marks a missing cell.
    let mut body: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let skip = usize::from(config.label_column);

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Ingest {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if config.has_header && header.is_none() {
            header = Some(record.iter().skip(skip).map(str::to_owned).collect());
            continue;
        }
        let n = record.len();
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(Error::Ingest {
                    row,
                    column: n.min(w) + 1,
                    message: format!("expected {w} fields, found {n}"),
                })
            }
            _ => {}
        }
        if config.label_column {
            row_labels.push(record.get(0).unwrap_or_default().to_owned());
        }
        let mut parsed = Vec::with_capacity(n.saturating_sub(skip));
        for (c, cell) in record.iter().enumerate().skip(skip) {
            let column = c + 1;
            if is_missing(cell) {
                if config.missing == MissingPolicy::Reject {
                    return Err(Error::Ingest {
                        row,
                        column,
                        message: "missing value".into(),
                    });
                }
                parsed.push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Ingest {
                row,
                column,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Ingest {
                    row,
                    column,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            parsed.push(v);
        }
        body.push(parsed);
    }

    let rows = body.len();
    let cols = width.map_or(0, |w| w - skip);
    if rows == 0 || cols == 0 {
        return Err(Error::Ingest {
            row: 0,
            column: 0,
            message: "no numeric data".into(),
        });
    }
    let header_offset = usize::from(config.has_header);

    let (d, t) = match config.orientation {
        Orientation::RowsAreTime => (cols, rows),
        Orientation::RowsAreObservables => (rows, cols),
    };
    let mut values = DMatrix::from_fn(d, t, |i, k| match config.orientation {
        Orientation::RowsAreTime => body[k][i],
        Orientation::RowsAreObservables => body[i][k],
    });

    // Forward fill along time; any NaN left here comes from a missing cell.
    for i in 0..d {
        for k in 0..t {
            if values[(i, k)].is_nan() {
                if k == 0 {
                    let (row, column) = match config.orientation {
                        Orientation::RowsAreTime => (header_offset + 1, i + skip + 1),
                        Orientation::RowsAreObservables => (header_offset + i + 1, skip + 1),
                    };
                    return Err(Error::Ingest {
                        row,
                        column,
                        message: "missing value with nothing to forward-fill from".into(),
                    });
                }
                values[(i, k)] = values[(i, k - 1)];
            }
        }
    }

    let mut s = SnapshotMatrix::new(values).map_err(|e| Error::Ingest {
        row: 0,
        column: 0,
        message: e.to_string(),
    })?;
    let (obs_labels, time_labels) = match config.orientation {
        Orientation::RowsAreTime => (header, (!row_labels.is_empty()).then_some(row_labels)),
        Orientation::RowsAreObservables => ((!row_labels.is_empty()).then_some(row_labels), header),
    };
    if let Some(l) = obs_labels {
        s = s.with_labels(l)?;
    }
    if let Some(ts) = time_labels {
        s = s.with_timestamps(ts)?;
    }
    if let Some(dt) = config.dt {
        s = s.with_dt(dt);
    }
    Ok(s)
}

/// Formats a value with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows-are-time CSV. A header is written when labels are present and
/// a leading `time` column when timestamps are present.
pub fn write_csv<W: Write>(writer: W, s: &SnapshotMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    if let Some(labels) = s.labels() {
        let mut head: Vec<&str> = Vec::new();
        if s.timestamps().is_some() {
            head.push("time");
        }
        head.extend(labels.iter().map(String::as_str));
        w.write_record(&head).map_err(csv_err)?;
    }
    for k in 0..s.len() {
        let mut rec: Vec<String> = Vec::with_capacity(s.d() + 1);
        if let Some(ts) = s.timestamps() {
            rec.push(ts[k].clone());
        }
        rec.extend(s.values().column(k).iter().map(|v| format_f64(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(path: impl AsRef<Path>, s: &SnapshotMatrix) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    write_csv(std::io::BufWriter::new(file), s)
}

/// The ingest configuration that reads back what [`write_csv`] produced.
pub fn written_config(s: &SnapshotMatrix) -> IngestConfig {
    IngestConfig {
        has_header: s.labels().is_some(),
        label_column: s.timestamps().is_some(),
        missing: MissingPolicy::Reject,
        dt: s.dt(),
        ..IngestConfig::default()
    }
}

/// `||predicted - actual||_2 / ||actual||_2`.
///
/// Returns 0 when both vectors are zero and `+inf` when only `actual` is.
pub fn relative_error(predicted: &[f64], actual: &[f64]) -> f64 {
    assert_eq!(predicted.len(), actual.len(), "relative_error length mismatch");
    let den = l2(actual.iter().copied());
    let num = l2(predicted.iter().zip(actual).map(|(p, a)| p - a));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Overflow-safe Euclidean norm.
fn l2(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}
