//! Rotating-frame covariance paths and the two-point steering solver.
//!
//! The family interpolates between the transport and information geodesics
//! through a penalty weight `eps` on the skew part of the steering matrix:
//! the running cost is `|sym(A)|^2 + eps |skew(A)|^2`. Optimal paths have the
//! closed form `P(t) = T(t) P0 T(t)'` with
//! `T(t) = exp((1+eps) skew(A0) t) exp((sym(A0) - eps skew(A0)) t)`
//! ([`WlsModel`]), and the steering matrix rotates without changing its cost.
//!
//! Optimal initial steerings are parametrised by a symmetric costate `Pi`
//! through [`costate_steering`]; hitting a target endpoint `P1` becomes the
//! matrix fixed-point problem `h(Pi) = P1` built from [`h_map`]. The solvers
//! in this module track that fixed point:
//!
//! * [`solve_continuation`] follows the solution curve from the commuting
//!   parameter `alpha = 0`, where [`pi_seed`] is exact, up to the requested
//!   `alpha` with a Runge-Kutta predictor and a Newton polish.
//! * [`solve_local`] is the damped Newton iteration itself, usable from any
//!   starting guess.
//! * [`solve_eps_sweep`] and [`solve_homotopy`] warm-start the local solver
//!   across a grid of penalty weights, which is how distinct solution
//!   branches at small `eps` are followed until they merge.
//!
//! `alpha = (1+eps)/(2 eps)` is the parameter the fixed-point problem is
//! naturally posed in; [`eps_to_alpha`] and [`alpha_to_eps`] convert between
//! the two, and [`existence_bound`] gives the radius in `alpha` within which
//! the fixed point is guaranteed unique.

mod model;
mod operator;
mod solve;

pub use model::{costate_steering, WlsModel, WlsSolution};
pub use operator::{h_map, HhatContext, SymBasis, SymLinearOperator};
pub use solve::{
    solve_continuation, solve_eps_sweep, solve_homotopy, solve_local, LocalError,
    DEFAULT_CONTINUATION_STEPS,
};

use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, SpdMatrix, SymMatrix};
use crate::metrics::commutator_pseudonorm;
use crate::scalar::{cast, to_f64, Scalar};

/// Converts the skew penalty weight to the fixed-point parameter
/// `alpha = (1+eps)/(2 eps)`.
///
/// Fails at the pole `eps = 0`, where the skew part is free and `alpha`
/// diverges.
pub fn eps_to_alpha<T: Scalar>(eps: T) -> Result<T> {
    if eps == T::zero() {
        return Err(Error::ParameterPole {
            name: "eps",
            value: 0.0,
        });
    }
    Ok((T::one() + eps) / (cast::<T>(2.0) * eps))
}

/// Converts the fixed-point parameter back to the penalty weight
/// `eps = 1/(2 alpha - 1)`.
///
/// Fails at the pole `alpha = 1/2`, which corresponds to `eps` diverging
/// (the purely symmetric limit).
pub fn alpha_to_eps<T: Scalar>(alpha: T) -> Result<T> {
    let denom = cast::<T>(2.0) * alpha - T::one();
    if denom == T::zero() {
        return Err(Error::ParameterPole {
            name: "alpha",
            value: to_f64(alpha),
        });
    }
    Ok(T::one() / denom)
}

/// Seed costate `Pi0 = -(1/2) P0^{-1/2} log(P0^{-1/2} P1 P0^{-1/2}) P0^{-1/2}`.
///
/// At `alpha = 0` this solves the endpoint problem exactly (the induced path
/// is the information geodesic), which makes it the natural starting point
/// for continuation in `alpha`.
pub fn pi_seed<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<SymMatrix<T>> {
    check_same_dim(p0.dim(), p1.dim())?;
    let isqrt = p0.inv_sqrt();
    let whitened = SpdMatrix::new(isqrt.matrix() * p1.matrix() * isqrt.matrix())?;
    let m = isqrt.matrix() * whitened.log().matrix() * isqrt.matrix() * cast::<T>(-0.5);
    Ok(SymMatrix::symmetrize(&m))
}

/// Guaranteed existence radius in `alpha` for the endpoint fixed point.
///
/// For `|alpha|` below
/// `max(lmin(P0) lmin(P1) / (|P0|_a lmax(P1)), lmin(P0) lmin(P1) / (|P1|_a lmax(P0)))`,
/// where `|.|_a` is the eigenvalue spread [`commutator_pseudonorm`], the
/// fixed-point map is a contraction and the solution is unique. Commuting
/// endpoints have zero spread and an unbounded radius, reported as infinity.
pub fn existence_bound<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<T> {
    check_same_dim(p0.dim(), p1.dim())?;
    let product = p0.lambda_min() * p1.lambda_min();
    let ratio = |spread: T, lmax: T| {
        let denom = spread * lmax;
        if denom == T::zero() {
            cast::<T>(f64::INFINITY)
        } else {
            product / denom
        }
    };
    let first = ratio(commutator_pseudonorm(&p0.to_sym()), p1.lambda_max());
    let second = ratio(commutator_pseudonorm(&p1.to_sym()), p0.lambda_max());
    Ok(first.max(second))
}

/// Uniform bound on the operator norm of the fixed-point derivative
/// [`HhatContext`]: `|P0|_a lmax(P1) / (lmin(P0) lmin(P1))`.
pub fn hhat_norm_bound<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<T> {
    check_same_dim(p0.dim(), p1.dim())?;
    Ok(commutator_pseudonorm(&p0.to_sym()) * p1.lambda_max() / (p0.lambda_min() * p1.lambda_min()))
}

/// Upper bound on the optimal split-norm cost between `p0` and `p1`:
/// the squared cost of the constant-steering path through the transport
/// midpoint factor, `|log(P0^{-1/2} (P0^{1/2} P1 P0^{1/2})^{1/2} P0^{-1/2})|_F^2`.
pub fn wls_cost_upper_bound<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<T> {
    check_same_dim(p0.dim(), p1.dim())?;
    let sqrt = p0.sqrt();
    let isqrt = p0.inv_sqrt();
    let mid = SpdMatrix::new(sqrt.matrix() * p1.matrix() * sqrt.matrix())?;
    let inner = SpdMatrix::new(isqrt.matrix() * mid.sqrt().matrix() * isqrt.matrix())?;
    let norm = inner.log().matrix().norm();
    Ok(norm * norm)
}

/// Geometric grid of `count` values from `lo` to `hi`, endpoints included.
///
/// Both endpoints must share a sign and be nonzero; used for sweeping the
/// penalty weight with warm starts.
pub fn geometric_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Result<Vec<T>> {
    if count < 2 {
        return Err(Error::InvalidArgument {
            reason: format!("geometric grid needs at least 2 points, got {count}"),
        });
    }
    if lo * hi <= T::zero() {
        return Err(Error::InvalidArgument {
            reason: "geometric grid endpoints must be nonzero and share a sign".into(),
        });
    }
    let ratio = hi / lo;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let frac = cast::<T>(k as f64 / (count - 1) as f64);
        out.push(lo * ratio.powf(frac));
    }
    out[count - 1] = hi;
    Ok(out)
}
