//! Distances between SPD matrices and the commutator pseudo-norm.
//!
//! * [`bw_distance`] — the transport (Bures–Wasserstein) distance, the
//!   minimal Frobenius mismatch `||P0^{1/2} - P1^{1/2} U||_F` over orthogonal
//!   alignments `U`.
//! * [`fr_distance`] — the information (Fisher–Rao / affine-invariant)
//!   distance `||log(P0^{-1/2} P1 P0^{-1/2})||_F`.
//! * [`commutator_pseudonorm`] — the operator norm of `D -> D P - P D` over
//!   symmetric `D` with unit Frobenius norm, which for symmetric `P` equals
//!   the spread `lambda_max - lambda_min`.

use crate::error::Result;
use crate::matrix::{check_same_dim, symmetric_eigen_sorted, SpdMatrix, SymMatrix};
use crate::scalar::Scalar;

/// Transport (Bures–Wasserstein) distance between two SPD matrices.
///
/// Computed as `||P0^{1/2} - P1^{1/2} U||_F` with the optimal orthogonal
/// alignment `U = P1^{-1/2} P0^{-1/2} (P0^{1/2} P1 P0^{1/2})^{1/2}`.
pub fn bw_distance<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<T> {
    check_same_dim(p0.dim(), p1.dim())?;
    let p0_sqrt = p0.sqrt();
    let p1_sqrt = p1.sqrt();
    let middle = SpdMatrix::new(p0_sqrt.matrix() * p1.matrix() * p0_sqrt.matrix())?;
    let u = p1_sqrt.inverse().matrix() * p0.inv_sqrt().matrix() * middle.sqrt().matrix();
    let diff = p0_sqrt.matrix() - p1_sqrt.matrix() * u;
    Ok(diff.norm())
}

/// Information (Fisher–Rao) distance between two SPD matrices,
/// `||log(P0^{-1/2} P1 P0^{-1/2})||_F`.
pub fn fr_distance<T: Scalar>(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<T> {
    check_same_dim(p0.dim(), p1.dim())?;
    let isqrt = p0.inv_sqrt();
    let whitened = SpdMatrix::new(isqrt.matrix() * p1.matrix() * isqrt.matrix())?;
    Ok(whitened.log().matrix().norm())
}

/// Commutator pseudo-norm: the largest ratio `||D P - P D||_F / ||D||_F` over
/// nonzero symmetric `D`.
///
/// For symmetric `P` this equals the eigenvalue spread
/// `lambda_max(P) - lambda_min(P)`; it vanishes exactly on multiples of the
/// identity.
pub fn commutator_pseudonorm<T: Scalar>(p: &SymMatrix<T>) -> T {
    if p.dim() == 0 {
        return T::zero();
    }
    let (values, _) = symmetric_eigen_sorted(p.matrix().clone());
    values[values.len() - 1] - values[0]
}
