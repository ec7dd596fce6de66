//! Family-tagged union of the parametric path models.
//!
//! [`PathModel`] wraps a transport geodesic, an information geodesic, or a
//! split-norm optimal path behind one [`CovariancePath`] implementation and
//! one serialized representation: the family tag, the start point `P0`, the
//! factor parameter (`Q`, `A`, or `A0`), and the skew penalty `eps` for the
//! split-norm family. Fitting, file I/O, and the command line all exchange
//! paths in this form.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geodesics::{GeodesicInfo, GeodesicOmt};
use crate::matrix::{GeneralMatrix, SpdMatrix};
use crate::path::{CovariancePath, RunningCost};
use crate::scalar::Scalar;
use crate::wls::WlsModel;

/// Identifier of a parametric path family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Transport geodesics `(I - tQ) P0 (I - tQ)'`.
    Omt,
    /// Information geodesics `e^{At} P0 e^{A't}`.
    Info,
    /// Split-norm optimal paths with a fixed skew penalty.
    Wls,
}

impl Family {
    /// All families, in canonical order.
    pub const ALL: [Family; 3] = [Family::Omt, Family::Info, Family::Wls];

    /// Lowercase tag used in files and on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Family::Omt => "omt",
            Family::Info => "info",
            Family::Wls => "wls",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omt" => Ok(Family::Omt),
            "info" => Ok(Family::Info),
            "wls" => Ok(Family::Wls),
            other => Err(Error::InvalidArgument {
                reason: format!("unknown family {other:?}, expected omt, info, or wls"),
            }),
        }
    }
}

/// A parametric covariance path from one of the three families.
#[derive(Debug, Clone)]
pub enum PathModel<T: Scalar> {
    /// Transport geodesic.
    Omt(GeodesicOmt<T>),
    /// Information geodesic.
    Info(GeodesicInfo<T>),
    /// Split-norm optimal path.
    Wls(WlsModel<T>),
}

impl<T: Scalar> PathModel<T> {
    /// Builds a model from its serialized parts.
    ///
    /// `param` is the family's factor parameter (`Q`, `A`, or `A0`); `eps`
    /// is required for [`Family::Wls`] and ignored otherwise. Transport
    /// parameters are rejected when `I - tQ` becomes singular on `[0, 1]`.
    pub fn from_parts(
        family: Family,
        p0: SpdMatrix<T>,
        param: GeneralMatrix<T>,
        eps: Option<T>,
    ) -> Result<Self> {
        match family {
            Family::Omt => Ok(PathModel::Omt(GeodesicOmt::with_param(p0, param)?)),
            Family::Info => Ok(PathModel::Info(GeodesicInfo::with_param(p0, param)?)),
            Family::Wls => {
                let eps = eps.ok_or_else(|| Error::InvalidArgument {
                    reason: "the wls family requires eps".into(),
                })?;
                Ok(PathModel::Wls(WlsModel::new(p0, param, eps)?))
            }
        }
    }

    /// Family tag.
    pub fn family(&self) -> Family {
        match self {
            PathModel::Omt(_) => Family::Omt,
            PathModel::Info(_) => Family::Info,
            PathModel::Wls(_) => Family::Wls,
        }
    }

    /// Start point `P0`.
    pub fn p0(&self) -> &SpdMatrix<T> {
        match self {
            PathModel::Omt(m) => m.p0(),
            PathModel::Info(m) => m.p0(),
            PathModel::Wls(m) => m.p0(),
        }
    }

    /// Factor parameter: `Q` for omt, `A` for info, `A0` for wls.
    pub fn param(&self) -> &GeneralMatrix<T> {
        match self {
            PathModel::Omt(m) => m.param(),
            PathModel::Info(m) => m.param(),
            PathModel::Wls(m) => m.a0(),
        }
    }

    /// Skew penalty weight, present only for the split-norm family.
    pub fn eps(&self) -> Option<T> {
        match self {
            PathModel::Wls(m) => Some(m.eps()),
            _ => None,
        }
    }

    /// The running cost this family's paths minimize.
    pub fn natural_cost(&self) -> RunningCost<T> {
        match self {
            PathModel::Omt(_) => RunningCost::Transport,
            PathModel::Info(_) => RunningCost::FisherRao,
            PathModel::Wls(m) => RunningCost::SplitNorm(m.eps()),
        }
    }
}

impl<T: Scalar> CovariancePath<T> for PathModel<T> {
    fn dim(&self) -> usize {
        match self {
            PathModel::Omt(m) => m.dim(),
            PathModel::Info(m) => m.dim(),
            PathModel::Wls(m) => m.dim(),
        }
    }

    fn eval_raw(&self, t: T) -> Result<DMatrix<T>> {
        match self {
            PathModel::Omt(m) => m.eval_raw(t),
            PathModel::Info(m) => m.eval_raw(t),
            PathModel::Wls(m) => m.eval_raw(t),
        }
    }

    fn steering(&self, t: T) -> Result<GeneralMatrix<T>> {
        match self {
            PathModel::Omt(m) => m.steering(t),
            PathModel::Info(m) => m.steering(t),
            PathModel::Wls(m) => m.steering(t),
        }
    }

    fn sample_raw(&self, times: &[T]) -> Result<Vec<DMatrix<T>>> {
        match self {
            PathModel::Omt(m) => m.sample_raw(times),
            PathModel::Info(m) => m.sample_raw(times),
            PathModel::Wls(m) => m.sample_raw(times),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
struct ModelDto<T: Scalar> {
    family: Family,
    #[serde(rename = "P0")]
    p0: SpdMatrix<T>,
    param: GeneralMatrix<T>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    eps: Option<T>,
}

impl<T: Scalar + Serialize> Serialize for PathModel<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDto {
            family: self.family(),
            p0: self.p0().clone(),
            param: self.param().clone(),
            eps: self.eps(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for PathModel<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = ModelDto::<T>::deserialize(deserializer)?;
        PathModel::from_parts(dto.family, dto.p0, dto.param, dto.eps).map_err(D::Error::custom)
    }
}
