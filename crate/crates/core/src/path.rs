//! Covariance-path abstraction and running steering costs.
//!
//! A covariance path is a curve `t -> P(t)` of SPD matrices on `[0, 1]`
//! together with a steering matrix `A(t)` satisfying the flow equation
//! `Ṗ = A P + P A'`. Parametric families implement [`CovariancePath`];
//! [`path_cost`] integrates a selected [`RunningCost`] along the path with
//! Gauss–Legendre quadrature.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{GeneralMatrix, SpdMatrix};
use crate::quadrature;
use crate::scalar::{cast, to_f64, Scalar};

/// Default number of Gauss–Legendre nodes for path costs.
pub const DEFAULT_QUAD_POINTS: usize = 64;

/// A parametric covariance path on `[0, 1]` with its steering field.
pub trait CovariancePath<T: Scalar> {
    /// State dimension.
    fn dim(&self) -> usize;

    /// Path value at `t` as a raw matrix (symmetric positive definite for
    /// feasible parameters).
    fn eval_raw(&self, t: T) -> Result<DMatrix<T>>;

    /// Steering matrix `A(t)` with `Ṗ = A P + P A'`.
    fn steering(&self, t: T) -> Result<GeneralMatrix<T>>;

    /// Path value at `t`, validated as SPD.
    fn eval(&self, t: T) -> Result<SpdMatrix<T>> {
        SpdMatrix::new(self.eval_raw(t)?)
    }

    /// Path values at several times; implementations may exploit uniform
    /// grids.
    fn sample_raw(&self, times: &[T]) -> Result<Vec<DMatrix<T>>> {
        times.iter().map(|&t| self.eval_raw(t)).collect()
    }
}

/// Running cost `c(P, A)` integrated along a path.
#[derive(Debug, Clone)]
pub enum RunningCost<T: Scalar> {
    /// Kinetic transport cost `tr(A P A')`.
    Transport,
    /// Weighted transport cost `tr(W A P A')`.
    WeightedTransport(SpdMatrix<T>),
    /// Information metric applied to the flow: `2 tr(A A + P^{-1} A P A')`.
    FisherRao,
    /// Transport form of the information cost: `4 tr(P^{-1} A P A')`.
    FisherRaoTransport,
    /// Split steering norm `||A_s||_F^2 + eps ||A_a||_F^2` of the symmetric
    /// and antisymmetric parts of `A`.
    SplitNorm(T),
}

impl<T: Scalar> RunningCost<T> {
    /// Evaluates the cost on raw matrices.
    pub(crate) fn eval_raw(&self, p: &DMatrix<T>, a: &DMatrix<T>) -> Result<T> {
        match self {
            RunningCost::Transport => Ok((a * p * a.transpose()).trace()),
            RunningCost::WeightedTransport(w) => Ok((w.matrix() * a * p * a.transpose()).trace()),
            RunningCost::FisherRao => {
                let p_inv_apat = solve_spd(p, &(a * p * a.transpose()))?;
                Ok(cast::<T>(2.0) * ((a * a).trace() + p_inv_apat.trace()))
            }
            RunningCost::FisherRaoTransport => {
                let p_inv_apat = solve_spd(p, &(a * p * a.transpose()))?;
                Ok(cast::<T>(4.0) * p_inv_apat.trace())
            }
            RunningCost::SplitNorm(eps) => {
                let half = cast::<T>(0.5);
                let at = a.transpose();
                let sym = (a + &at) * half;
                let skew = (a - &at) * half;
                Ok(sym.norm_squared() + *eps * skew.norm_squared())
            }
        }
    }

    /// Evaluates the cost at a single path point.
    pub fn eval(&self, p: &SpdMatrix<T>, a: &GeneralMatrix<T>) -> Result<T> {
        if p.dim() != a.dim() {
            return Err(Error::DimensionMismatch {
                left: p.dim(),
                right: a.dim(),
            });
        }
        self.eval_raw(p.matrix(), a.matrix())
    }
}

fn solve_spd<T: Scalar>(p: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
    p.clone()
        .cholesky()
        .map(|ch| ch.solve(rhs))
        .or_else(|| p.clone().lu().solve(rhs))
        .ok_or_else(|| Error::DegenerateParameter {
            reason: format!("path matrix is singular (norm {:.3e})", to_f64(p.norm())),
        })
}

/// Kinetic transport cost `tr(A P A')`.
pub fn transport_cost<T: Scalar>(p: &SpdMatrix<T>, a: &GeneralMatrix<T>) -> Result<T> {
    RunningCost::Transport.eval(p, a)
}

/// Weighted transport cost `tr(W A P A')`.
pub fn weighted_transport_cost<T: Scalar>(
    w: &SpdMatrix<T>,
    p: &SpdMatrix<T>,
    a: &GeneralMatrix<T>,
) -> Result<T> {
    RunningCost::WeightedTransport(w.clone()).eval(p, a)
}

/// Information cost of the flow, `2 tr(A A + P^{-1} A P A')`.
pub fn fisher_rao_cost<T: Scalar>(p: &SpdMatrix<T>, a: &GeneralMatrix<T>) -> Result<T> {
    RunningCost::FisherRao.eval(p, a)
}

/// Transport form of the information cost, `4 tr(P^{-1} A P A')`.
pub fn fisher_rao_transport_cost<T: Scalar>(p: &SpdMatrix<T>, a: &GeneralMatrix<T>) -> Result<T> {
    RunningCost::FisherRaoTransport.eval(p, a)
}

/// Split steering norm `||A_s||_F^2 + eps ||A_a||_F^2`.
pub fn split_norm_cost<T: Scalar>(eps: T, a: &GeneralMatrix<T>) -> T {
    RunningCost::SplitNorm(eps)
        .eval_raw(&DMatrix::identity(a.dim(), a.dim()), a.matrix())
        .expect("split norm does not invert the path matrix")
}

/// Integrates a running cost along a path with Gauss–Legendre quadrature.
pub fn path_cost<T: Scalar>(
    path: &impl CovariancePath<T>,
    cost: &RunningCost<T>,
    quad_points: usize,
) -> Result<T> {
    quadrature::integrate(quad_points, |t| {
        let p = path.eval_raw(t)?;
        let a = path.steering(t)?;
        cost.eval_raw(&p, a.matrix())
    })
}
