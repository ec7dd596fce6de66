//! Multichannel time series: CSV loading, channel normalization, and
//! windowed sample covariances.
//!
//! [`windowed_covariances`] splits a series into equal-length windows and
//! forms the second-moment matrix `(1/L) Σ x x'` per window; means are not
//! subtracted, matching the usual estimator for preprocessed zero-mean data.
//! [`TimeSeries::normalize`] divides each channel by its population standard
//! deviation, optionally subtracting channel means first.

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::CovSequence;
use crate::matrix::SymMatrix;
use crate::scalar::{cast, to_f64, Scalar};

/// Relative threshold below which a channel's standard deviation counts as
/// zero.
const STD_FLOOR_REL: f64 = 1e-12;

/// A real-valued series, one sample per row and one channel per column.
#[derive(Debug, Clone)]
pub struct TimeSeries<T: Scalar> {
    data: DMatrix<T>,
    labels: Option<Vec<String>>,
}

impl<T: Scalar> TimeSeries<T> {
    /// Wraps a samples-by-channels matrix with optional channel labels.
    pub fn new(data: DMatrix<T>, labels: Option<Vec<String>>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InvalidArgument {
                reason: format!(
                    "a time series needs at least 2 samples, got {}",
                    data.nrows()
                ),
            });
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidArgument {
                reason: "a time series needs at least one channel".into(),
            });
        }
        if data.iter().any(|&x| !to_f64(x).is_finite()) {
            return Err(Error::InvalidArgument {
                reason: "time series entries must be finite".into(),
            });
        }
        if let Some(labels) = &labels {
            if labels.len() != data.ncols() {
                return Err(Error::DimensionMismatch {
                    left: labels.len(),
                    right: data.ncols(),
                });
            }
        }
        Ok(Self { data, labels })
    }

    /// Number of samples (rows).
    pub fn samples(&self) -> usize {
        self.data.nrows()
    }

    /// Number of channels (columns).
    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    /// The samples-by-channels data matrix.
    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    /// Channel labels, when the source file had a header row.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Divides each channel by its population standard deviation (taken
    /// about the channel mean, `ddof = 0`).
    ///
    /// Means are preserved unless `demean` is set, in which case they are
    /// subtracted first. A channel with vanishing standard deviation cannot
    /// be scaled and is reported by index.
    pub fn normalize(&self, demean: bool) -> Result<TimeSeries<T>> {
        let count = cast::<T>(self.samples() as f64);
        let mut out = self.data.clone();
        for channel in 0..self.channels() {
            let column = self.data.column(channel);
            let mean = column.sum() / count;
            let variance = column
                .iter()
                .map(|&x| (x - mean) * (x - mean))
                .fold(T::zero(), |a, b| a + b)
                / count;
            let std = variance.sqrt();
            if std <= cast::<T>(STD_FLOOR_REL) * (T::one() + mean.abs()) {
                return Err(Error::ZeroVariance { channel });
            }
            let shift = if demean { mean } else { T::zero() };
            for row in 0..self.samples() {
                out[(row, channel)] = (self.data[(row, channel)] - shift) / std;
            }
        }
        TimeSeries::new(out, self.labels.clone())
    }
}

/// Loads a comma-separated series, one sample per row and one channel per
/// column.
///
/// A first row containing any non-numeric cell is taken as channel labels.
/// Parse failures report the 1-based line they occurred on; `NaN` and
/// infinite values are rejected.
pub fn load_timeseries<T: Scalar>(path: impl AsRef<Path>) -> Result<TimeSeries<T>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .trim(Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(csv_error)?;
    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record.map_err(csv_error)?);
    }
    if records.is_empty() {
        return Err(Error::InvalidArgument {
            reason: "the file holds no samples".into(),
        });
    }

    let is_header = records[0].iter().any(|cell| cell.parse::<f64>().is_err());
    let labels = is_header.then(|| records[0].iter().map(str::to_owned).collect::<Vec<_>>());
    let channels = records[0].len();
    let data_records = if is_header {
        &records[1..]
    } else {
        &records[..]
    };

    let mut rows: Vec<T> = Vec::with_capacity(data_records.len() * channels);
    for record in data_records {
        let line = record_line(record);
        if record.len() != channels {
            return Err(Error::Parse {
                line,
                reason: format!("expected {channels} columns, got {}", record.len()),
            });
        }
        for cell in record.iter() {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                reason: format!("cell {cell:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    reason: format!("non-finite value {value} in this row"),
                });
            }
            rows.push(cast::<T>(value));
        }
    }
    let data = DMatrix::from_row_iterator(rows.len() / channels.max(1), channels, rows);
    TimeSeries::new(data, labels)
}

fn record_line(record: &StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    let message = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Parse {
            line,
            reason: message,
        },
    }
}

/// Splits the series into `windows` equal-length segments and returns the
/// per-window second moments `(1/L) Σ x x'` as a covariance sequence.
///
/// The window length is `floor(samples / windows)`; trailing remainder
/// samples are dropped. Window times are uniform on `[0, 1]`. Windows
/// shorter than the channel count produce singular moments, which the
/// sequence's repair step lifts back to SPD.
pub fn windowed_covariances<T: Scalar>(
    ts: &TimeSeries<T>,
    windows: usize,
) -> Result<CovSequence<T>> {
    if windows == 0 {
        return Err(Error::InvalidArgument {
            reason: "at least one window is required".into(),
        });
    }
    let length = ts.samples() / windows;
    if length == 0 {
        return Err(Error::InvalidArgument {
            reason: format!("{} windows do not fit {} samples", windows, ts.samples()),
        });
    }
    let n = ts.channels();
    let mut times = Vec::with_capacity(windows);
    let mut matrices = Vec::with_capacity(windows);
    for k in 0..windows {
        let block = ts.data().view((k * length, 0), (length, n)).clone_owned();
        let moment = block.transpose() * &block / cast::<T>(length as f64);
        matrices.push(SymMatrix::symmetrize(&moment));
        times.push(if windows == 1 {
            T::zero()
        } else {
            cast::<T>(k as f64 / (windows - 1) as f64)
        });
    }
    CovSequence::new(times, matrices)
}
