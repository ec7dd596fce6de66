//! Seeded synthetic covariance sequences with known ground truth.
//!
//! [`synth_generate`] draws a random, well-conditioned path model of the
//! requested family, samples it at uniform knot times, and adds independent
//! symmetric Gaussian noise. The exact generating model is returned next to
//! the noisy data, so fitting and verification can be exercised against a
//! known answer.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fit::CovSequence;
use crate::matrix::{GeneralMatrix, SpdMatrix, SymMatrix};
use crate::model::{Family, PathModel};
use crate::path::CovariancePath;
use crate::scalar::{cast, Scalar};

/// Skew penalty of generated split-norm models.
pub const SYNTH_WLS_EPS: f64 = 20.0;

/// Eigenvalue range of generated start points.
const LAMBDA_RANGE: (f64, f64) = (0.5, 3.0);
/// Frobenius-norm range of generated transport factors; staying below one
/// keeps `I - tQ` invertible on the whole interval.
const OMT_NORM_RANGE: (f64, f64) = (0.2, 0.8);
/// Frobenius-norm range of generated steering generators.
const STEERING_NORM_RANGE: (f64, f64) = (0.3, 1.5);

/// Draws a random model of `family` and samples it at `knots + 1` uniform
/// times with i.i.d. symmetric Gaussian noise of entrywise scale
/// `noise_sigma`.
///
/// The start point gets eigenvalues in `[0.5, 3]` on a random orthogonal
/// frame; transport factors get Frobenius norm in `[0.2, 0.8]`, steering
/// generators in `[0.3, 1.5]`, and split-norm models the fixed penalty
/// [`SYNTH_WLS_EPS`]. All randomness derives from `seed`, so equal
/// arguments reproduce identical output. Returns the noisy (repaired)
/// sequence together with the exact generating model.
pub fn synth_generate<T: Scalar>(
    family: Family,
    n: usize,
    knots: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(CovSequence<T>, PathModel<T>)> {
    if n == 0 {
        return Err(Error::InvalidArgument {
            reason: "the dimension must be at least 1".into(),
        });
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::InvalidArgument {
            reason: format!("the noise scale must be finite and nonnegative, got {noise_sigma}"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let p0 = random_start(&mut rng, n)?;
    let (param, eps) = match family {
        Family::Omt => (random_with_norm(&mut rng, n, OMT_NORM_RANGE), None),
        Family::Info => (random_with_norm(&mut rng, n, STEERING_NORM_RANGE), None),
        Family::Wls => (
            random_with_norm(&mut rng, n, STEERING_NORM_RANGE),
            Some(cast::<T>(SYNTH_WLS_EPS)),
        ),
    };
    let model = PathModel::from_parts(family, p0, param, eps)?;

    let times: Vec<T> = if knots == 0 {
        vec![T::zero()]
    } else {
        (0..=knots)
            .map(|i| cast::<T>(i as f64 / knots as f64))
            .collect()
    };
    let raw = model.sample_raw(&times)?;
    let matrices = raw
        .iter()
        .map(|sample| {
            let mut noisy = SymMatrix::symmetrize(sample).into_matrix();
            for i in 0..n {
                for j in i..n {
                    let e = cast::<T>(noise_sigma * rng.sample::<f64, _>(StandardNormal));
                    noisy[(i, j)] += e;
                    if i != j {
                        noisy[(j, i)] += e;
                    }
                }
            }
            SymMatrix::symmetrize(&noisy)
        })
        .collect();
    let seq = CovSequence::new(times, matrices)?;
    Ok((seq, model))
}

fn random_start<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Result<SpdMatrix<T>> {
    let gaussian =
        DMatrix::<T>::from_fn(n, n, |_, _| cast::<T>(rng.sample::<f64, _>(StandardNormal)));
    let frame = gaussian.qr().q();
    let lambdas = DVector::<T>::from_fn(n, |_, _| {
        cast::<T>(rng.random_range(LAMBDA_RANGE.0..LAMBDA_RANGE.1))
    });
    let sym =
        SymMatrix::symmetrize(&(&frame * DMatrix::from_diagonal(&lambdas) * frame.transpose()));
    SpdMatrix::from_sym(sym)
}

fn random_with_norm<T: Scalar>(
    rng: &mut ChaCha8Rng,
    n: usize,
    range: (f64, f64),
) -> GeneralMatrix<T> {
    let target = cast::<T>(rng.random_range(range.0..range.1));
    let mut m = DMatrix::<T>::from_fn(n, n, |_, _| cast::<T>(rng.sample::<f64, _>(StandardNormal)));
    let norm = m.norm();
    if norm > T::zero() {
        m *= target / norm;
    }
    GeneralMatrix::from_raw(m)
}
