//! Directional (Fréchet) derivatives of the matrix exponential and
//! logarithm, and exponentials of skew-symmetric generators.
//!
//! For a matrix function `f`, the Fréchet derivative at `X` in direction `D`
//! is the linear term of `f(X + D) - f(X)`. Two cases matter here:
//!
//! * the derivative of `exp` at a generator `G`, computed from the identity
//!   `exp([[G, D], [0, G]]) = [[e^G, L], [0, e^G]]` whose upper-right block
//!   `L` is exactly the derivative ([`exp_frechet`]);
//! * the derivative of `log` at an SPD matrix `X`, evaluated spectrally via
//!   divided differences of the logarithm ([`log_frechet`]), together with
//!   its inverse map [`exp_frechet_spd`].
//!
//! [`skew_exp`] exponentiates skew generators through their real Schur form,
//! whose 2x2 diagonal blocks exponentiate to plane rotations; the result is
//! orthogonal by construction.

use nalgebra::{DMatrix, Schur};

use crate::error::Result;
use crate::matrix::{
    check_same_dim, scaled_tol, GeneralMatrix, SkewMatrix, SpdMatrix, SymMatrix, EIGEN_GAP_REL,
};
use crate::scalar::{cast, Scalar};

/// General matrix exponential (Padé approximant with scaling and squaring).
pub(crate) fn expm<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    m.exp()
}

/// Fréchet derivative of the matrix exponential at `generator` in direction
/// `direction`.
///
/// Uses the block-triangular identity
/// `exp([[G, D], [0, G]])[0..n, n..2n] = D exp(G)[D]`, which handles
/// arbitrary (including non-normal) generators without quadrature.
pub fn exp_frechet<T: Scalar>(
    generator: &GeneralMatrix<T>,
    direction: &GeneralMatrix<T>,
) -> Result<GeneralMatrix<T>> {
    check_same_dim(generator.dim(), direction.dim())?;
    let n = generator.dim();
    let g = generator.matrix();
    let d = direction.matrix();
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(g);
    block.view_mut((n, n), (n, n)).copy_from(g);
    block.view_mut((0, n), (n, n)).copy_from(d);
    let e = expm(&block);
    Ok(GeneralMatrix::from_raw(e.view((0, n), (n, n)).into_owned()))
}

/// Applies a divided-difference kernel of the eigenvalues of `x` to a
/// symmetric direction, in the eigenbasis of `x`.
fn spectral_kernel<T: Scalar>(
    x: &SpdMatrix<T>,
    direction: &SymMatrix<T>,
    kernel: impl Fn(T, T, bool) -> T,
) -> Result<SymMatrix<T>> {
    check_same_dim(x.dim(), direction.dim())?;
    let n = x.dim();
    let v = x.eigenvectors();
    let lam = x.eigenvalues();
    let gap_tol = scaled_tol::<T>(EIGEN_GAP_REL) * x.lambda_max();
    let d_tilde = v.transpose() * direction.matrix() * v;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let near = (lam[i] - lam[j]).abs() < gap_tol;
            out[(i, j)] = d_tilde[(i, j)] * kernel(lam[i], lam[j], near);
        }
    }
    let back = v * out * v.transpose();
    Ok(SymMatrix::symmetrize(&back))
}

/// Fréchet derivative of the matrix logarithm at the SPD matrix `x` in the
/// symmetric direction `direction`.
///
/// In the eigenbasis of `x` the derivative scales entry `(i, j)` by the
/// divided difference `(ln l_i - ln l_j)/(l_i - l_j)`, with the analytic
/// limit `2/(l_i + l_j)` once the eigenvalue gap falls below
/// [`EIGEN_GAP_REL`] times the largest eigenvalue.
pub fn log_frechet<T: Scalar>(x: &SpdMatrix<T>, direction: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let two = cast::<T>(2.0);
    spectral_kernel(x, direction, |li, lj, near| {
        if near {
            two / (li + lj)
        } else {
            (li.ln() - lj.ln()) / (li - lj)
        }
    })
}

/// Fréchet derivative of the matrix exponential evaluated at `log(x)` for SPD
/// `x`, in the symmetric direction `direction`.
///
/// This is the exact inverse of [`log_frechet`] at the same `x`; the spectral
/// kernel is `(l_i - l_j)/(ln l_i - ln l_j)` with limit `sqrt(l_i l_j)`.
pub fn exp_frechet_spd<T: Scalar>(
    x: &SpdMatrix<T>,
    direction: &SymMatrix<T>,
) -> Result<SymMatrix<T>> {
    spectral_kernel(x, direction, |li, lj, near| {
        if near {
            (li * lj).sqrt()
        } else {
            (li - lj) / (li.ln() - lj.ln())
        }
    })
}

/// Exponential `exp(scale * K)` of a skew-symmetric generator, an orthogonal
/// matrix.
///
/// The real Schur form of `K` is block diagonal with 2x2 skew blocks
/// `[[0, w], [-w, 0]]`, which exponentiate to plane rotations by the angle
/// `scale * w`; real Schur eigenvalues of a skew matrix are zero and map to
/// one. Falls back to the Padé exponential in the unlikely event the Schur
/// iteration does not converge.
pub fn skew_exp<T: Scalar>(k: &SkewMatrix<T>, scale: T) -> GeneralMatrix<T> {
    let n = k.dim();
    if n == 0 {
        return GeneralMatrix::zeros(0);
    }
    let norm = k.matrix().norm();
    if norm * scale.abs() == T::zero() {
        return GeneralMatrix::identity(n);
    }
    let schur = Schur::try_new(k.matrix().clone(), T::default_epsilon() * norm, 10_000);
    let Some(schur) = schur else {
        return GeneralMatrix::from_raw(expm(&(k.matrix() * scale)));
    };
    let (q, t) = schur.unpack();
    let mut rot = DMatrix::identity(n, n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > scaled_tol::<T>(1e-12) * norm {
            let w = (t[(i, i + 1)] - t[(i + 1, i)]) * cast::<T>(0.5) * scale;
            let (s, c) = w.sin_cos();
            rot[(i, i)] = c;
            rot[(i, i + 1)] = s;
            rot[(i + 1, i)] = -s;
            rot[(i + 1, i + 1)] = c;
            i += 2;
        } else {
            i += 1;
        }
    }
    GeneralMatrix::from_raw(&q * rot * q.transpose())
}
