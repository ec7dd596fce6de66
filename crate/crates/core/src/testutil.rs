//! Seeded random matrix generators shared by unit tests.

use nalgebra::DMatrix;
use rand::Rng;

use crate::matrix::SpdMatrix;

/// Random symmetric matrix with entries uniform in `[-scale, scale]`.
pub(crate) fn random_sym(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale));
    (&g + g.transpose()) * 0.5
}

/// Random square matrix with entries uniform in `[-scale, scale]`.
pub(crate) fn random_general(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..scale))
}

/// Random well-conditioned SPD matrix (Gram matrix plus a positive shift).
pub(crate) fn random_spd(rng: &mut impl Rng, n: usize) -> SpdMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mat = &g * g.transpose() + DMatrix::identity(n, n) * rng.random_range(0.3..1.0);
    SpdMatrix::new(mat).expect("A A' + c I is SPD")
}

/// Independent matrix exponential: scaling and squaring with a plain Taylor
/// series, no spectral decomposition or Padé approximant involved.
pub(crate) fn exp_taylor_oracle(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut scaled = m.clone();
    let mut squarings = 0u32;
    while scaled.norm() > 0.25 {
        scaled /= 2.0;
        squarings += 1;
    }
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..60 {
        term = (&term * &scaled) / (k as f64);
        result += &term;
        if term.norm() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
