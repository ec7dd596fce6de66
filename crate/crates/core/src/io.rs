//! JSON file exchange for models, solutions, and sampled paths.
//!
//! [`save_json`] writes atomically (temporary file in the target directory,
//! then rename), so readers never observe a half-written file. [`PathFile`]
//! is the on-disk shape shared by the path-emitting commands: an optional
//! parametric [`PathModel`], an optional solver [`WlsSolution`], and the
//! sampled times, matrices, and steering fields. Files holding only samples
//! are valid; [`PathFile::to_model`] returns `None` for them.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::Result;
use crate::matrix::{GeneralMatrix, SymMatrix};
use crate::model::PathModel;
use crate::path::CovariancePath;
use crate::scalar::Scalar;
use crate::wls::WlsSolution;

/// Serializes `value` as pretty-printed JSON, atomically replacing `path`.
pub fn save_json<V: Serialize>(value: &V, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir)?;
    let mut writer = BufWriter::new(tmp);
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    let tmp = writer
        .into_inner()
        .map_err(std::io::IntoInnerError::into_error)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Deserializes a JSON value from `path`.
pub fn load_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

/// On-disk representation of a covariance path.
///
/// Any combination of a parametric model, a solver solution, and sampled
/// data; empty sample vectors are omitted from the JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct PathFile<T: Scalar> {
    /// Parametric model, when the file describes one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<PathModel<T>>,
    /// Boundary-value solver output, for solved split-norm paths.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solution: Option<WlsSolution<T>>,
    /// Sample times in `[0, 1]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<T>,
    /// Path samples, one per time.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<SymMatrix<T>>,
    /// Steering samples, one per time, when available.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub steering: Option<Vec<GeneralMatrix<T>>>,
}

impl<T: Scalar> PathFile<T> {
    /// Samples `model` on `times` and packages model, path, and steering.
    pub fn from_model(model: &PathModel<T>, times: &[T]) -> Result<Self> {
        let raw = model.sample_raw(times)?;
        let matrices = raw.iter().map(SymMatrix::symmetrize).collect();
        let steering = times
            .iter()
            .map(|&t| model.steering(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model: Some(model.clone()),
            solution: None,
            times: times.to_vec(),
            matrices,
            steering: Some(steering),
        })
    }

    /// Wraps bare samples with no parametric model attached.
    pub fn from_samples(times: Vec<T>, matrices: Vec<SymMatrix<T>>) -> Self {
        Self {
            model: None,
            solution: None,
            times,
            matrices,
            steering: None,
        }
    }

    /// The parametric model described by this file, if any.
    ///
    /// Prefers the explicit `model` field; otherwise rebuilds the path from
    /// a stored solver solution.
    pub fn to_model(&self) -> Result<Option<PathModel<T>>> {
        if let Some(model) = &self.model {
            return Ok(Some(model.clone()));
        }
        if let Some(solution) = &self.solution {
            return Ok(Some(PathModel::Wls(solution.model()?)));
        }
        Ok(None)
    }
}
