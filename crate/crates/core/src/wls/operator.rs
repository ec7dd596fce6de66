//! The endpoint fixed-point map `h` and its linearisation.
//!
//! For a costate `Pi` and parameter `alpha`, the induced path reaches
//! `h(Pi) = U' P0^{1/2} exp(-2 S~) P0^{1/2} U` at `t = 1`, where
//! `S~ = P0^{1/2} Pi P0^{1/2}` and `U = exp(alpha (Pi P0 - P0 Pi))` is
//! orthogonal. Solving `h(Pi) = P1` is equivalent to the fixed point
//! `Pi = G(Pi)` with
//! `G(Pi) = -(1/2) P0^{-1/2} log(P0^{-1/2} U P1 U' P0^{-1/2}) P0^{-1/2}`,
//! whose derivative is `alpha` times the bounded linear operator computed by
//! [`HhatContext::apply`]. The solvers build its matrix in the orthonormal
//! basis [`SymBasis`] of symmetric matrices.

use nalgebra::{DMatrix, DVector};

use crate::calculus::{exp_frechet, log_frechet, skew_exp};
use crate::error::Result;
use crate::matrix::{check_same_dim, spd_exp, GeneralMatrix, SkewMatrix, SpdMatrix, SymMatrix};
use crate::scalar::{cast, Scalar};

/// Orthonormal basis of `n x n` symmetric matrices under the Frobenius inner
/// product: the diagonal units `E_ii` followed by `(E_ij + E_ji)/sqrt(2)` for
/// `i < j` in lexicographic order.
#[derive(Debug, Clone)]
pub struct SymBasis<T: Scalar> {
    n: usize,
    elems: Vec<SymMatrix<T>>,
}

impl<T: Scalar> SymBasis<T> {
    /// Basis for symmetric matrices of side `n`.
    pub fn new(n: usize) -> Self {
        let inv_r2 = T::one() / cast::<T>(2.0).sqrt();
        let mut elems = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            let mut m = DMatrix::zeros(n, n);
            m[(i, i)] = T::one();
            elems.push(SymMatrix::symmetrize(&m));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = inv_r2;
                m[(j, i)] = inv_r2;
                elems.push(SymMatrix::symmetrize(&m));
            }
        }
        Self { n, elems }
    }

    /// Matrix side length `n`.
    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of basis elements, `n(n+1)/2`.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    /// Whether the basis is empty (only for `n = 0`).
    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// The `k`-th basis element.
    pub fn element(&self, k: usize) -> &SymMatrix<T> {
        &self.elems[k]
    }

    /// Coordinates of a symmetric matrix: diagonal entries, then
    /// upper-triangle entries scaled by `sqrt(2)`. Preserves the Frobenius
    /// norm.
    pub fn coords(&self, s: &SymMatrix<T>) -> DVector<T> {
        let r2 = cast::<T>(2.0).sqrt();
        let m = s.matrix();
        let mut v = DVector::zeros(self.len());
        let mut k = 0;
        for i in 0..self.n {
            v[k] = m[(i, i)];
            k += 1;
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                v[k] = m[(i, j)] * r2;
                k += 1;
            }
        }
        v
    }

    /// Symmetric matrix with the given coordinates.
    pub fn matrix(&self, v: &DVector<T>) -> SymMatrix<T> {
        let inv_r2 = T::one() / cast::<T>(2.0).sqrt();
        let mut m = DMatrix::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            m[(i, i)] = v[k];
            k += 1;
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m[(i, j)] = v[k] * inv_r2;
                m[(j, i)] = v[k] * inv_r2;
                k += 1;
            }
        }
        SymMatrix::symmetrize(&m)
    }
}

/// A linear operator on symmetric matrices, stored as its matrix in a
/// [`SymBasis`].
#[derive(Debug, Clone)]
pub struct SymLinearOperator<T: Scalar> {
    n: usize,
    mat: DMatrix<T>,
}

impl<T: Scalar> SymLinearOperator<T> {
    /// Builds the operator column by column by applying `f` to each basis
    /// element.
    pub fn from_fn(
        basis: &SymBasis<T>,
        mut f: impl FnMut(&SymMatrix<T>) -> Result<SymMatrix<T>>,
    ) -> Result<Self> {
        let m = basis.len();
        let mut mat = DMatrix::zeros(m, m);
        for k in 0..m {
            let col = basis.coords(&f(basis.element(k))?);
            mat.column_mut(k).copy_from(&col);
        }
        Ok(Self {
            n: basis.side(),
            mat,
        })
    }

    /// Matrix side length of the symmetric arguments.
    pub fn side(&self) -> usize {
        self.n
    }

    /// The operator matrix in basis coordinates.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.mat
    }

    /// Applies the operator to a symmetric matrix.
    pub fn apply(&self, basis: &SymBasis<T>, s: &SymMatrix<T>) -> SymMatrix<T> {
        basis.matrix(&(&self.mat * basis.coords(s)))
    }

    /// Operator norm (largest singular value) with respect to the Frobenius
    /// norm on symmetric matrices.
    pub fn operator_norm(&self) -> T {
        let svd = self.mat.clone().svd(false, false);
        svd.singular_values
            .iter()
            .fold(T::zero(), |acc, &s| acc.max(s))
    }
}

/// Rotation frame shared by the endpoint map and its derivative.
struct CostateFrame<T: Scalar> {
    s: SkewMatrix<T>,
    u: GeneralMatrix<T>,
    q_model: SpdMatrix<T>,
}

impl<T: Scalar> CostateFrame<T> {
    fn new(p0: &SpdMatrix<T>, pi: &SymMatrix<T>, alpha: T) -> Self {
        let sqrt = p0.sqrt();
        let s_tilde = SymMatrix::symmetrize(&(sqrt.matrix() * pi.matrix() * sqrt.matrix()));
        let commutator = (pi.matrix() * p0.matrix() - p0.matrix() * pi.matrix()) * alpha;
        let s = SkewMatrix::skew_project(&commutator);
        let u = skew_exp(&s, T::one());
        let q_model = spd_exp(&SymMatrix::symmetrize(
            &(s_tilde.matrix() * cast::<T>(-2.0)),
        ));
        Self { s, u, q_model }
    }
}

/// Endpoint of the path induced by costate `pi` at parameter `alpha`:
/// `h(Pi) = U' P0^{1/2} exp(-2 P0^{1/2} Pi P0^{1/2}) P0^{1/2} U`.
pub fn h_map<T: Scalar>(p0: &SpdMatrix<T>, pi: &SymMatrix<T>, alpha: T) -> Result<SpdMatrix<T>> {
    check_same_dim(p0.dim(), pi.dim())?;
    let frame = CostateFrame::new(p0, pi, alpha);
    let sqrt = p0.sqrt();
    let inner = sqrt.matrix() * frame.q_model.matrix() * sqrt.matrix();
    SpdMatrix::new(frame.u.matrix().transpose() * inner * frame.u.matrix())
}

/// Workspace for evaluating the fixed-point map and its derivative at a
/// fixed `(P0, P1, Pi, alpha)`.
pub struct HhatContext<T: Scalar> {
    p0_isqrt: SpdMatrix<T>,
    p0: SpdMatrix<T>,
    p1: SpdMatrix<T>,
    frame: CostateFrame<T>,
    /// `P0^{-1/2} U P1 U' P0^{-1/2}`, the argument of the logarithm in the
    /// fixed-point map.
    q_target: SpdMatrix<T>,
    h: SymMatrix<T>,
}

impl<T: Scalar> HhatContext<T> {
    /// Builds the workspace; fails if the whitened rotated endpoint loses
    /// definiteness numerically.
    pub fn new(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>, pi: &SymMatrix<T>, alpha: T) -> Result<Self> {
        check_same_dim(p0.dim(), p1.dim())?;
        check_same_dim(p0.dim(), pi.dim())?;
        let frame = CostateFrame::new(p0, pi, alpha);
        let p0_sqrt = p0.sqrt();
        let p0_isqrt = p0.inv_sqrt();
        let rotated = frame.u.matrix() * p1.matrix() * frame.u.matrix().transpose();
        let q_target = SpdMatrix::new(p0_isqrt.matrix() * rotated * p0_isqrt.matrix())?;
        let inner = p0_sqrt.matrix() * frame.q_model.matrix() * p0_sqrt.matrix();
        let h = SymMatrix::symmetrize(&(frame.u.matrix().transpose() * inner * frame.u.matrix()));
        Ok(Self {
            p0_isqrt,
            p0: p0.clone(),
            p1: p1.clone(),
            frame,
            q_target,
            h,
        })
    }

    /// Endpoint `h(Pi)` of the induced path.
    pub fn h_value(&self) -> &SymMatrix<T> {
        &self.h
    }

    /// Endpoint residual `P1 - h(Pi)` as a symmetric matrix.
    pub fn residual_matrix(&self) -> SymMatrix<T> {
        SymMatrix::symmetrize(&(self.p1.matrix() - self.h.matrix()))
    }

    /// Frobenius norm of the endpoint residual.
    pub fn residual_norm(&self) -> T {
        self.residual_matrix().matrix().norm()
    }

    /// The fixed-point map
    /// `G(Pi) = -(1/2) P0^{-1/2} log(P0^{-1/2} U P1 U' P0^{-1/2}) P0^{-1/2}`;
    /// `Pi` solves the endpoint problem exactly when `G(Pi) = Pi`.
    pub fn fixed_point_rhs(&self) -> SymMatrix<T> {
        let log = self.q_target.log();
        let m = self.p0_isqrt.matrix() * log.matrix() * self.p0_isqrt.matrix();
        SymMatrix::symmetrize(&(m * cast::<T>(-0.5)))
    }

    /// Applies the derivative operator: `d/ds G(Pi + s Delta) = alpha *
    /// apply(Delta)` at `s = 0`.
    ///
    /// The chain runs through the orthogonal factor only: with
    /// `C = Delta P0 - P0 Delta`, the exponential derivative
    /// `M = Dexp(S)[C]` perturbs `U`, and the logarithm derivative at
    /// `q_target` pulls the perturbation back to costate space.
    pub fn apply(&self, delta: &SymMatrix<T>) -> Result<SymMatrix<T>> {
        let c = SkewMatrix::skew_project(
            &(delta.matrix() * self.p0.matrix() - self.p0.matrix() * delta.matrix()),
        );
        let m_u = exp_frechet(
            &GeneralMatrix::from_raw(self.frame.s.matrix().clone()),
            &GeneralMatrix::from_raw(c.into_matrix()),
        )?;
        let t1 = self.p0_isqrt.matrix()
            * m_u.matrix()
            * self.p1.matrix()
            * self.frame.u.matrix().transpose()
            * self.p0_isqrt.matrix();
        let arg = SymMatrix::symmetrize(&(&t1 + t1.transpose()));
        let pushed = log_frechet(&self.q_target, &arg)?;
        let out = self.p0_isqrt.matrix() * pushed.matrix() * self.p0_isqrt.matrix();
        Ok(SymMatrix::symmetrize(&(out * cast::<T>(-0.5))))
    }

    /// Pulls an endpoint perturbation back to costate space:
    /// `G` evaluated with target `h(Pi) + R` differs from `Pi` by
    /// `backmap(R) + O(|R|^2)`. This is the right-hand side of the Newton
    /// step in [`crate::wls::solve_local`].
    pub fn endpoint_backmap(&self, r: &SymMatrix<T>) -> Result<SymMatrix<T>> {
        let mid = self.p0_isqrt.matrix()
            * self.frame.u.matrix()
            * r.matrix()
            * self.frame.u.matrix().transpose()
            * self.p0_isqrt.matrix();
        let pushed = log_frechet(&self.frame.q_model, &SymMatrix::symmetrize(&mid))?;
        let out = self.p0_isqrt.matrix() * pushed.matrix() * self.p0_isqrt.matrix();
        Ok(SymMatrix::symmetrize(&(out * cast::<T>(-0.5))))
    }

    /// Matrix of the derivative operator in the given basis.
    pub fn operator(&self, basis: &SymBasis<T>) -> Result<SymLinearOperator<T>> {
        SymLinearOperator::from_fn(basis, |e| self.apply(e))
    }
}
