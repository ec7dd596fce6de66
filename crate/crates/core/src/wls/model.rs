//! Closed-form optimal paths for the split-norm steering cost.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calculus::{expm, skew_exp};
use crate::error::Result;
use crate::geodesics::uniform_step;
use crate::matrix::{check_same_dim, GeneralMatrix, SkewMatrix, SpdMatrix, SymMatrix};
use crate::path::{split_norm_cost, CovariancePath};
use crate::scalar::{cast, Scalar};

/// Initial steering matrix induced by a symmetric costate:
/// `A0 = -(1/2)(P0 Pi + Pi P0) - (alpha - 1/2)(Pi P0 - P0 Pi)`.
///
/// Its symmetric and skew parts satisfy `sym(A0) - eps skew(A0) = -P0 Pi` and
/// `(1+eps) skew(A0) = alpha (P0 Pi - Pi P0)` with `eps = 1/(2 alpha - 1)`;
/// at `alpha = 0` the steering collapses to `-P0 Pi` and the induced path is
/// the information geodesic.
pub fn costate_steering<T: Scalar>(
    p0: &SpdMatrix<T>,
    pi: &SymMatrix<T>,
    alpha: T,
) -> Result<GeneralMatrix<T>> {
    check_same_dim(p0.dim(), pi.dim())?;
    let forward = p0.matrix() * pi.matrix();
    let backward = pi.matrix() * p0.matrix();
    let half = cast::<T>(0.5);
    let a = (&forward + &backward) * (-half) - (backward - forward) * (alpha - half);
    Ok(GeneralMatrix::from_raw(a))
}

/// Covariance path with constant split-norm running cost.
///
/// The path is `P(t) = T(t) P0 T(t)'` with transition
/// `T(t) = exp((1+eps) Ka t) exp((Ks - eps Ka) t)`, where `Ks` and `Ka` are
/// the symmetric and skew parts of the initial steering `A0`. The steering
/// matrix along the path is the rotated `A(t) = R(t) A0 R(t)'` with the
/// orthogonal factor `R(t) = exp((1+eps) Ka t)`, so
/// `|sym(A(t))|^2 + eps |skew(A(t))|^2` is constant in `t`.
#[derive(Debug, Clone)]
pub struct WlsModel<T: Scalar> {
    p0: SpdMatrix<T>,
    a0: GeneralMatrix<T>,
    eps: T,
    a_skew: SkewMatrix<T>,
    second_gen: DMatrix<T>,
}

impl<T: Scalar> WlsModel<T> {
    /// Path from an initial covariance, initial steering, and penalty weight.
    pub fn new(p0: SpdMatrix<T>, a0: GeneralMatrix<T>, eps: T) -> Result<Self> {
        check_same_dim(p0.dim(), a0.dim())?;
        let a_skew = a0.skew_part();
        let second_gen = a0.symmetric_part().matrix() - a_skew.matrix() * eps;
        Ok(Self {
            p0,
            a0,
            eps,
            a_skew,
            second_gen,
        })
    }

    /// Path induced by a symmetric costate at fixed-point parameter `alpha`.
    pub fn from_costate(p0: &SpdMatrix<T>, pi: &SymMatrix<T>, alpha: T) -> Result<Self> {
        let eps = super::alpha_to_eps(alpha)?;
        let a0 = costate_steering(p0, pi, alpha)?;
        Self::new(p0.clone(), a0, eps)
    }

    /// Start point.
    pub fn p0(&self) -> &SpdMatrix<T> {
        &self.p0
    }

    /// Initial steering matrix.
    pub fn a0(&self) -> &GeneralMatrix<T> {
        &self.a0
    }

    /// Skew penalty weight.
    pub fn eps(&self) -> T {
        self.eps
    }

    /// Running cost of the path, `|sym(A0)|^2 + eps |skew(A0)|^2`
    /// (constant along the path).
    pub fn cost(&self) -> T {
        split_norm_cost(self.eps, &self.a0)
    }

    /// Transition factor `T(t)` mapping `P0` to `P(t) = T(t) P0 T(t)'`.
    pub fn transition(&self, t: T) -> GeneralMatrix<T> {
        let r = skew_exp(&self.a_skew, (T::one() + self.eps) * t);
        let f = expm(&(&self.second_gen * t));
        GeneralMatrix::from_raw(r.matrix() * f)
    }
}

impl<T: Scalar> CovariancePath<T> for WlsModel<T> {
    fn dim(&self) -> usize {
        self.p0.dim()
    }

    fn eval_raw(&self, t: T) -> Result<DMatrix<T>> {
        let tr = self.transition(t);
        Ok(tr.matrix() * self.p0.matrix() * tr.matrix().transpose())
    }

    fn steering(&self, t: T) -> Result<GeneralMatrix<T>> {
        let r = skew_exp(&self.a_skew, (T::one() + self.eps) * t);
        Ok(GeneralMatrix::from_raw(
            r.matrix() * self.a0.matrix() * r.matrix().transpose(),
        ))
    }

    fn sample_raw(&self, times: &[T]) -> Result<Vec<DMatrix<T>>> {
        if let Some(step) = uniform_step(times) {
            let r_step = skew_exp(&self.a_skew, (T::one() + self.eps) * step);
            let f_step = expm(&(&self.second_gen * step));
            let mut r = skew_exp(&self.a_skew, (T::one() + self.eps) * times[0]).into_matrix();
            let mut f = expm(&(&self.second_gen * times[0]));
            let mut out = Vec::with_capacity(times.len());
            for _ in times {
                let tr = &r * &f;
                out.push(&tr * self.p0.matrix() * tr.transpose());
                r = r_step.matrix() * r;
                f = &f_step * f;
            }
            return Ok(out);
        }
        times.iter().map(|&t| self.eval_raw(t)).collect()
    }
}

/// Output of the two-point steering solvers: the costate, the induced
/// steering, and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct WlsSolution<T: Scalar> {
    /// Skew penalty weight.
    pub eps: T,
    /// Fixed-point parameter `(1+eps)/(2 eps)`.
    pub alpha: T,
    /// Start point of the solved path.
    #[serde(rename = "P0")]
    pub p0: SpdMatrix<T>,
    /// Symmetric costate solving the endpoint fixed point.
    #[serde(rename = "Pi")]
    pub pi: SymMatrix<T>,
    /// Induced initial steering matrix.
    #[serde(rename = "A0")]
    pub a0: GeneralMatrix<T>,
    /// Endpoint residual `|P1 - h(Pi)|_F` at the returned costate.
    pub residual: T,
    /// Split-norm running cost of the induced path.
    pub cost: T,
    /// Optional label distinguishing solution branches in a sweep.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub branch: Option<String>,
}

impl<T: Scalar> WlsSolution<T> {
    /// The covariance path induced by this solution.
    pub fn model(&self) -> Result<WlsModel<T>> {
        WlsModel::new(self.p0.clone(), self.a0.clone(), self.eps)
    }
}
