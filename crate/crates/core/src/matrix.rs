//! Validated matrix types and scalar matrix functions.
//!
//! Four newtypes around [`nalgebra::DMatrix`] encode the shape and
//! definiteness contracts used throughout the crate:
//!
//! * [`GeneralMatrix`] — any square matrix,
//! * [`SymMatrix`] — symmetric within [`SYMMETRY_TOL_REL`], stored exactly
//!   symmetrized,
//! * [`SkewMatrix`] — skew-symmetric, stored with an exactly zero diagonal,
//! * [`SpdMatrix`] — symmetric positive definite, storing its sorted
//!   eigendecomposition computed once at construction.
//!
//! Matrix functions of SPD arguments (square root, logarithm, powers) are
//! evaluated through the cached spectrum; [`spd_exp`] exponentiates a
//! symmetric matrix into the SPD cone.
//!
//! All types serialize as `{"dim": n, "entries": [[..], ..]}` with row-major
//! entries, and deserialization re-runs the constructor checks.

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

/// Relative symmetry tolerance: the antisymmetric part of an accepted
/// symmetric matrix may be at most this multiple of its Frobenius norm.
pub const SYMMETRY_TOL_REL: f64 = 1e-9;

/// Relative positive-definiteness floor: the smallest eigenvalue must exceed
/// this multiple of the largest.
pub const SPD_FLOOR_REL: f64 = 1e-12;

/// Relative tolerance for reproducing an SPD matrix from its cached spectrum.
pub const RECONSTRUCTION_TOL_REL: f64 = 1e-12;

/// Relative eigenvalue gap below which divided differences switch to their
/// analytic limit.
pub const EIGEN_GAP_REL: f64 = 1e-8;

/// Scales an `f64`-calibrated tolerance to the working scalar type.
///
/// For `f64` this is the identity; for `f32` the tolerance grows by the ratio
/// of machine epsilons, keeping the checks meaningful at reduced precision.
pub(crate) fn scaled_tol<T: Scalar>(tol_f64: f64) -> T {
    cast::<T>(tol_f64) * T::default_epsilon() / cast::<T>(f64::EPSILON)
}

fn check_square<T: Scalar>(m: &DMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn check_finite<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument {
            reason: "matrix has a non-finite entry".to_string(),
        });
    }
    Ok(())
}

pub(crate) fn check_same_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
///
/// Returns `(values, vectors)` with eigenvectors in the matching columns.
pub(crate) fn symmetric_eigen_sorted<T: Scalar>(m: DMatrix<T>) -> (DVector<T>, DMatrix<T>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Any square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMatrix<T: Scalar> {
    mat: DMatrix<T>,
}

impl<T: Scalar> GeneralMatrix<T> {
    /// Wraps a square matrix with finite entries.
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        check_finite(&mat)?;
        Ok(Self { mat })
    }

    /// The zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    /// The identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
        }
    }

    pub(crate) fn from_raw(mat: DMatrix<T>) -> Self {
        Self { mat }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrows the underlying matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Consumes the wrapper and returns the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<T> {
        self.mat
    }

    /// Symmetric part `(M + M')/2`.
    pub fn symmetric_part(&self) -> SymMatrix<T> {
        SymMatrix::symmetrize(&self.mat)
    }

    /// Antisymmetric part `(M - M')/2`.
    pub fn skew_part(&self) -> SkewMatrix<T> {
        SkewMatrix::skew_project(&self.mat)
    }
}

/// A symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T: Scalar> {
    mat: DMatrix<T>,
}

impl<T: Scalar> SymMatrix<T> {
    /// Validates symmetry within [`SYMMETRY_TOL_REL`] and stores the exactly
    /// symmetrized matrix `(M + M')/2`.
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        check_finite(&mat)?;
        let asym = (&mat - mat.transpose()).norm() * cast::<T>(0.5);
        let tol = scaled_tol::<T>(SYMMETRY_TOL_REL) * mat.norm();
        if asym > tol {
            return Err(Error::NotSymmetric {
                asymmetry: to_f64(asym),
                tol: to_f64(tol),
            });
        }
        Ok(Self::symmetrize(&mat))
    }

    /// The zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    /// Symmetric part of an arbitrary matrix, without a symmetry check.
    pub(crate) fn symmetrize(mat: &DMatrix<T>) -> Self {
        let mut sym = mat.transpose();
        sym += mat;
        sym *= cast::<T>(0.5);
        Self { mat: sym }
    }

    /// Symmetric part `(M + M')/2` of a general matrix.
    pub fn symmetric_part_of(m: &GeneralMatrix<T>) -> Self {
        Self::symmetrize(m.matrix())
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrows the underlying matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Consumes the wrapper and returns the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<T> {
        self.mat
    }

    /// Converts into a general square matrix.
    pub fn to_general(&self) -> GeneralMatrix<T> {
        GeneralMatrix {
            mat: self.mat.clone(),
        }
    }

    /// Eigenvalues sorted ascending.
    pub fn eigenvalues(&self) -> DVector<T> {
        symmetric_eigen_sorted(self.mat.clone()).0
    }
}

/// A skew-symmetric matrix (`M' = -M`).
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix<T: Scalar> {
    mat: DMatrix<T>,
}

impl<T: Scalar> SkewMatrix<T> {
    /// Validates skew-symmetry within [`SYMMETRY_TOL_REL`] and stores the
    /// exact skew projection with a zero diagonal.
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        check_square(&mat)?;
        check_finite(&mat)?;
        let defect = (&mat + mat.transpose()).norm() * cast::<T>(0.5);
        let tol = scaled_tol::<T>(SYMMETRY_TOL_REL) * mat.norm();
        if defect > tol {
            return Err(Error::NotSkew {
                defect: to_f64(defect),
                tol: to_f64(tol),
            });
        }
        Ok(Self::skew_project(&mat))
    }

    /// The zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self {
            mat: DMatrix::zeros(n, n),
        }
    }

    /// Skew part of an arbitrary matrix, without a skewness check.
    pub(crate) fn skew_project(mat: &DMatrix<T>) -> Self {
        let half = cast::<T>(0.5);
        let n = mat.nrows();
        let mut skew = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    skew[(i, j)] = (mat[(i, j)] - mat[(j, i)]) * half;
                }
            }
        }
        Self { mat: skew }
    }

    /// Antisymmetric part `(M - M')/2` of a general matrix.
    pub fn skew_part_of(m: &GeneralMatrix<T>) -> Self {
        Self::skew_project(m.matrix())
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrows the underlying matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Consumes the wrapper and returns the underlying matrix.
    pub fn into_matrix(self) -> DMatrix<T> {
        self.mat
    }
}

/// A symmetric positive definite matrix with its eigendecomposition cached at
/// construction.
#[derive(Debug, Clone)]
pub struct SpdMatrix<T: Scalar> {
    mat: DMatrix<T>,
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
}

impl<T: Scalar> PartialEq for SpdMatrix<T> {
    fn eq(&self, other: &Self) -> bool {
        self.mat == other.mat
    }
}

impl<T: Scalar> SpdMatrix<T> {
    /// Validates symmetry and positive definiteness, then stores the matrix
    /// together with its sorted eigendecomposition.
    ///
    /// The smallest eigenvalue must exceed [`SPD_FLOOR_REL`] times the
    /// largest, and the spectrum must reproduce the entries within
    /// [`RECONSTRUCTION_TOL_REL`] times the largest eigenvalue.
    pub fn new(mat: DMatrix<T>) -> Result<Self> {
        let sym = SymMatrix::new(mat)?;
        Self::from_sym(sym)
    }

    /// Builds from an already-validated symmetric matrix.
    pub fn from_sym(sym: SymMatrix<T>) -> Result<Self> {
        let mat = sym.into_matrix();
        let n = mat.nrows();
        let (values, vectors) = symmetric_eigen_sorted(mat.clone());
        let lambda_min = values[0];
        let lambda_max = values[n - 1];
        if lambda_max <= T::zero() || lambda_min <= lambda_max * scaled_tol::<T>(SPD_FLOOR_REL) {
            return Err(Error::NotPositiveDefinite {
                lambda_min: to_f64(lambda_min),
                lambda_max: to_f64(lambda_max),
            });
        }
        let recon = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        let residual = (&recon - &mat).amax();
        if residual > scaled_tol::<T>(RECONSTRUCTION_TOL_REL) * lambda_max {
            return Err(Error::EigenFailure {
                residual: to_f64(residual / lambda_max),
            });
        }
        Ok(Self {
            mat,
            eigenvalues: values,
            eigenvectors: vectors,
        })
    }

    /// The identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        Self {
            mat: DMatrix::identity(n, n),
            eigenvalues: DVector::from_element(n, T::one()),
            eigenvectors: DMatrix::identity(n, n),
        }
    }

    /// Diagonal SPD matrix from strictly positive entries.
    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        let n = diag.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                T::zero()
            }
        }))
    }

    /// Rebuilds from a spectrum known to be valid (strictly positive values,
    /// orthonormal vectors). Sorts the pairs and symmetrizes the product.
    fn from_spectrum(mut values: DVector<T>, mut vectors: DMatrix<T>) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        if order.iter().enumerate().any(|(i, &o)| i != o) {
            values = DVector::from_fn(n, |i, _| values[order[i]]);
            vectors = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
        }
        let recon = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
        let mat = SymMatrix::symmetrize(&recon).into_matrix();
        Self {
            mat,
            eigenvalues: values,
            eigenvectors: vectors,
        }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Borrows the underlying matrix.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Converts into the symmetric wrapper (dropping the cached spectrum).
    pub fn to_sym(&self) -> SymMatrix<T> {
        SymMatrix {
            mat: self.mat.clone(),
        }
    }

    /// Eigenvalues sorted ascending.
    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors, columns matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> T {
        self.eigenvalues[0]
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Applies a function to the eigenvalues, keeping the eigenvectors.
    ///
    /// The function must map the positive axis into itself for the result to
    /// satisfy the SPD contract.
    fn map_spectrum(&self, f: impl Fn(T) -> T) -> Self {
        let values = self.eigenvalues.map(f);
        Self::from_spectrum(values, self.eigenvectors.clone())
    }

    /// Principal matrix square root.
    pub fn sqrt(&self) -> Self {
        self.map_spectrum(|l| l.sqrt())
    }

    /// Inverse of the principal square root.
    pub fn inv_sqrt(&self) -> Self {
        self.map_spectrum(|l| T::one() / l.sqrt())
    }

    /// Matrix inverse.
    pub fn inverse(&self) -> Self {
        self.map_spectrum(|l| T::one() / l)
    }

    /// Matrix power `P^t` for real `t`.
    pub fn powf(&self, t: T) -> Self {
        self.map_spectrum(|l| l.powf(t))
    }

    /// Matrix logarithm (symmetric, not necessarily definite).
    pub fn log(&self) -> SymMatrix<T> {
        let values = self.eigenvalues.map(|l| l.ln());
        let recon =
            &self.eigenvectors * DMatrix::from_diagonal(&values) * self.eigenvectors.transpose();
        SymMatrix::symmetrize(&recon)
    }

    /// Trace of the matrix.
    pub fn trace(&self) -> T {
        self.mat.trace()
    }
}

/// Matrix exponential of a symmetric matrix, which is SPD.
pub fn spd_exp<T: Scalar>(s: &SymMatrix<T>) -> SpdMatrix<T> {
    let (values, vectors) = symmetric_eigen_sorted(s.matrix().clone());
    SpdMatrix::from_spectrum(values.map(|l| l.exp()), vectors)
}

#[derive(Serialize, Deserialize)]
struct MatrixDto<T> {
    dim: usize,
    entries: Vec<Vec<T>>,
}

impl<T: Scalar> MatrixDto<T> {
    fn from_matrix(m: &DMatrix<T>) -> Self {
        let n = m.nrows();
        Self {
            dim: n,
            entries: (0..n)
                .map(|i| (0..n).map(|j| m[(i, j)]).collect())
                .collect(),
        }
    }

    fn into_matrix(self) -> Result<DMatrix<T>> {
        let n = self.dim;
        if self.entries.len() != n || self.entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument {
                reason: format!("matrix entries do not form an {n}x{n} grid"),
            });
        }
        Ok(DMatrix::from_fn(n, n, |i, j| self.entries[i][j]))
    }
}

macro_rules! impl_matrix_serde {
    ($ty:ident) => {
        impl<T: Scalar + Serialize> Serialize for $ty<T> {
            fn serialize<S: Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                MatrixDto::from_matrix(self.matrix()).serialize(serializer)
            }
        }

        impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for $ty<T> {
            fn deserialize<D: Deserializer<'de>>(
                deserializer: D,
            ) -> std::result::Result<Self, D::Error> {
                let dto = MatrixDto::<T>::deserialize(deserializer)?;
                let mat = dto.into_matrix().map_err(D::Error::custom)?;
                $ty::new(mat).map_err(D::Error::custom)
            }
        }
    };
}

impl_matrix_serde!(GeneralMatrix);
impl_matrix_serde!(SymMatrix);
impl_matrix_serde!(SkewMatrix);
impl_matrix_serde!(SpdMatrix);
