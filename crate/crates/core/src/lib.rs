//! Covariance paths on the manifold of symmetric positive definite (SPD)
//! matrices, driven by linear systems.
//!
//! A time-varying linear system `ẋ = A(t) x` pushes a Gaussian state
//! covariance along `Ṗ(t) = A(t) P(t) + P(t) A(t)'`. This crate builds and
//! analyses covariance paths of that form:
//!
//! * [`matrix`] — validated symmetric / SPD / skew / general matrix types with
//!   cached spectral decompositions and the scalar matrix functions
//!   (square root, logarithm, exponential, powers).
//! * [`calculus`] — directional (Fréchet) derivatives of the matrix
//!   exponential and logarithm, and exponentials of skew generators.
//! * [`metrics`] — the transport (Bures–Wasserstein) and information
//!   (Fisher–Rao) distances, plus the commutator pseudo-norm.
//! * [`path`] — the [`path::CovariancePath`] abstraction, running costs, and
//!   quadrature path costs.
//! * [`geodesics`] — closed-form transport and information geodesics between
//!   two SPD endpoints, including a weighted transport variant.
//! * [`wls`] — paths that minimise a split symmetric/antisymmetric steering
//!   norm: transition maps, the endpoint map in terms of a symmetric
//!   co-state, continuation and damped-Newton boundary-value solvers, and
//!   the uniqueness bound.
//! * [`oracle`] — independent numerical checks: flow integration, perturbed
//!   feasible paths, quadrature costs, and model verification reports.
//! * [`fit`] — fitting parametric path families to a sequence of (possibly
//!   noisy) covariance snapshots.
//! * [`timeseries`], [`synth`] — CSV ingestion, windowed sample covariances,
//!   and synthetic data generation.
//! * [`model`], [`io`] — the serializable path-model union and JSON/CSV
//!   wire formats.
//!
//! Everything is generic over the scalar type through [`scalar::Scalar`]
//! (satisfied by `f32` and `f64`); the crate root exports `f64` aliases such
//! as [`SpdMatrix64`] for the common case.

#![warn(missing_docs)]

pub mod calculus;
pub mod error;
pub mod fit;
pub mod geodesics;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod path;
pub mod quadrature;
pub mod scalar;
pub mod synth;
#[cfg(test)]
pub(crate) mod testutil;
pub mod timeseries;
pub mod wls;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Symmetric matrix with `f64` entries.
pub type SymMatrix64 = matrix::SymMatrix<f64>;
/// Symmetric positive definite matrix with `f64` entries.
pub type SpdMatrix64 = matrix::SpdMatrix<f64>;
/// Square matrix with `f64` entries.
pub type GeneralMatrix64 = matrix::GeneralMatrix<f64>;
/// Skew-symmetric matrix with `f64` entries.
pub type SkewMatrix64 = matrix::SkewMatrix<f64>;
/// Symmetric matrix with `f32` entries.
pub type SymMatrix32 = matrix::SymMatrix<f32>;
/// Symmetric positive definite matrix with `f32` entries.
pub type SpdMatrix32 = matrix::SpdMatrix<f32>;
/// Square matrix with `f32` entries.
pub type GeneralMatrix32 = matrix::GeneralMatrix<f32>;
/// Skew-symmetric matrix with `f32` entries.
pub type SkewMatrix32 = matrix::SkewMatrix<f32>;
/// Parametric covariance-path model with `f64` entries.
pub type PathModel64 = model::PathModel<f64>;
/// Steered-path model with `f64` entries.
pub type WlsModel64 = wls::WlsModel<f64>;
/// Covariance snapshot sequence with `f64` entries.
pub type CovSequence64 = fit::CovSequence<f64>;
