//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point element type for all matrix computations.
///
/// The blanket implementation covers `f32` and `f64`. Bounds come from
/// `nalgebra` (real-field arithmetic and decompositions) and `num-traits`
/// (conversions for tolerances and reporting); `Send + Sync` lets fitting
/// fan multistarts out across worker threads.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {}

impl<T> Scalar for T where T: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {}

/// Converts an `f64` constant into the scalar type.
///
/// Panics if the constant cannot be represented at all; for `f32` targets the
/// usual narrowing rounding applies.
pub(crate) fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant must be representable in the scalar type")
}

/// Converts a scalar into `f64` for diagnostics and serialization.
pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
