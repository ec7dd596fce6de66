//! Error type shared across the crate.

/// Errors produced by matrix validation, solvers, fitting, and data I/O.
#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    /// A matrix argument was not square.
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare {
        /// Row count of the offending matrix.
        rows: usize,
        /// Column count of the offending matrix.
        cols: usize,
    },
    /// Two arguments had incompatible dimensions.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch {
        /// Dimension of the first argument.
        left: usize,
        /// Dimension of the second argument.
        right: usize,
    },
    /// A matrix exceeded the symmetry tolerance.
    #[error("matrix is not symmetric: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric {
        /// Frobenius norm of the antisymmetric part.
        asymmetry: f64,
        /// Tolerance the asymmetry was compared against.
        tol: f64,
    },
    /// A matrix exceeded the skew-symmetry tolerance.
    #[error("matrix is not skew-symmetric: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotSkew {
        /// Frobenius norm of the symmetric part.
        defect: f64,
        /// Tolerance the defect was compared against.
        tol: f64,
    },
    /// A matrix was not positive definite within the relative floor.
    #[error(
        "matrix is not positive definite: min eigenvalue {lambda_min:.6e}, max {lambda_max:.6e}"
    )]
    NotPositiveDefinite {
        /// Smallest eigenvalue found.
        lambda_min: f64,
        /// Largest eigenvalue found.
        lambda_max: f64,
    },
    /// An eigendecomposition failed to reproduce its input.
    #[error("eigendecomposition failed: reconstruction residual {residual:.3e}")]
    EigenFailure {
        /// Max entrywise reconstruction error relative to the largest eigenvalue.
        residual: f64,
    },
    /// A parameter made the requested operation singular or undefined.
    #[error("degenerate parameter: {reason}")]
    DegenerateParameter {
        /// Human-readable description of the degeneracy.
        reason: String,
    },
    /// A parameter conversion hit a pole.
    #[error("parameter pole: {name} = {value}")]
    ParameterPole {
        /// Name of the parameter.
        name: &'static str,
        /// Offending value.
        value: f64,
    },
    /// The continuation linear system became numerically singular.
    #[error("continuation breakdown at tau = {tau:.4}: condition number {condition:.3e}")]
    ContinuationBreakdown {
        /// Continuation parameter at the breakdown.
        tau: f64,
        /// Estimated condition number of the stage system.
        condition: f64,
    },
    /// An iterative solver stopped above its tolerance.
    #[error("solver did not converge: residual {residual:.3e} above tolerance {tol:.3e}")]
    NonConvergence {
        /// Final residual.
        residual: f64,
        /// Tolerance that was requested.
        tol: f64,
    },
    /// A line search could not reduce the residual.
    #[error("line search stagnated after {iterations} iterations: residual {residual:.3e}")]
    Stagnation {
        /// Iterations completed before stagnation.
        iterations: usize,
        /// Best residual reached.
        residual: f64,
    },
    /// An integrated flow left the positive definite cone.
    #[error("path lost positive definiteness at t = {t:.6}")]
    PositivityLost {
        /// Time at which definiteness failed.
        t: f64,
    },
    /// A text input could not be parsed.
    #[error("parse error at line {line}: {reason}")]
    Parse {
        /// One-based line number.
        line: usize,
        /// Description of the problem.
        reason: String,
    },
    /// A channel had zero variance and cannot be normalized.
    #[error("channel {channel} has zero variance")]
    ZeroVariance {
        /// Zero-based channel index.
        channel: usize,
    },
    /// A caller-supplied argument was invalid.
    #[error("invalid argument: {reason}")]
    InvalidArgument {
        /// Description of the problem.
        reason: String,
    },
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON serialization or deserialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotSkew { .. } => "not_skew",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::EigenFailure { .. } => "eigen_failure",
            Error::DegenerateParameter { .. } => "degenerate_parameter",
            Error::ParameterPole { .. } => "parameter_pole",
            Error::ContinuationBreakdown { .. } => "continuation_breakdown",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Stagnation { .. } => "stagnation",
            Error::PositivityLost { .. } => "positivity_lost",
            Error::Parse { .. } => "parse",
            Error::ZeroVariance { .. } => "zero_variance",
            Error::InvalidArgument { .. } => "invalid_argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error reflects bad user input rather than a numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::InvalidArgument { .. } | Error::Io(_) | Error::Json(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
