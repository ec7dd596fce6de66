//! Quasi-Newton minimization with finite-difference gradients.
//!
//! The fitting objectives have at most a few dozen parameters, so gradients
//! are formed by central differences instead of hand-derived adjoints. The
//! objective may return `None` to mark an infeasible parameter vector; the
//! line search treats such points as worse than any feasible one, and the
//! gradient falls back to one-sided differences against the feasible center.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{cast, Scalar};

/// Relative step for finite-difference gradients.
const GRAD_STEP_REL: f64 = 1e-6;
/// Sufficient-decrease slope for the backtracking line search.
const ARMIJO_SLOPE: f64 = 1e-4;
/// Maximum step halvings per line search.
const MAX_BACKTRACKS: usize = 40;
/// Relative curvature floor below which the secant update is skipped.
const CURVATURE_FLOOR: f64 = 1e-10;

/// Final state of a quasi-Newton run.
#[derive(Debug, Clone)]
pub struct BfgsOutcome<T: Scalar> {
    /// Best iterate found.
    pub theta: DVector<T>,
    /// Objective value at [`BfgsOutcome::theta`].
    pub objective: T,
    /// Number of accepted steps.
    pub iterations: usize,
    /// Whether the gradient dropped below the tolerance.
    pub converged: bool,
}

/// Minimizes `f` from `theta0` with BFGS, central-difference gradients, and
/// an Armijo backtracking line search.
///
/// Convergence is declared when `|grad| <= grad_tol * (1 + |f|)`. Returns
/// `None` when `theta0` itself is infeasible; otherwise the accepted
/// objective values decrease monotonically and the best iterate is returned
/// even when the iteration budget runs out.
pub fn minimize<T: Scalar>(
    f: &(impl Fn(&DVector<T>) -> Option<T> + ?Sized),
    theta0: &DVector<T>,
    max_iters: usize,
    grad_tol: T,
) -> Option<BfgsOutcome<T>> {
    let dim = theta0.len();
    let mut theta = theta0.clone();
    let mut value = f(&theta)?;
    let mut inv_hessian = DMatrix::<T>::identity(dim, dim);
    let mut grad = gradient(f, &theta, value);
    let mut iterations = 0;
    let mut converged = grad.norm() <= grad_tol * (T::one() + value.abs());

    while !converged && iterations < max_iters {
        let mut direction = -(&inv_hessian * &grad);
        let mut slope = direction.dot(&grad);
        if slope >= T::zero() {
            inv_hessian = DMatrix::identity(dim, dim);
            direction = -grad.clone();
            slope = -grad.norm_squared();
        }

        let armijo = cast::<T>(ARMIJO_SLOPE);
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let candidate = &theta + &direction * step;
            if let Some(candidate_value) = f(&candidate) {
                if candidate_value <= value + armijo * step * slope {
                    accepted = Some((candidate, candidate_value));
                    break;
                }
            }
            step *= cast::<T>(0.5);
        }
        let Some((next_theta, next_value)) = accepted else {
            break;
        };

        let next_grad = gradient(f, &next_theta, next_value);
        let s = &next_theta - &theta;
        let y = &next_grad - &grad;
        let curvature = s.dot(&y);
        if curvature > cast::<T>(CURVATURE_FLOOR) * s.norm() * y.norm() {
            let rho = T::one() / curvature;
            let identity = DMatrix::<T>::identity(dim, dim);
            let left = &identity - &s * y.transpose() * rho;
            let right = &identity - &y * s.transpose() * rho;
            inv_hessian = &left * inv_hessian * &right + &s * s.transpose() * rho;
        }

        theta = next_theta;
        value = next_value;
        grad = next_grad;
        iterations += 1;
        converged = grad.norm() <= grad_tol * (T::one() + value.abs());
    }

    Some(BfgsOutcome {
        theta,
        objective: value,
        iterations,
        converged,
    })
}

fn gradient<T: Scalar>(
    f: &(impl Fn(&DVector<T>) -> Option<T> + ?Sized),
    theta: &DVector<T>,
    center: T,
) -> DVector<T> {
    let mut grad = DVector::zeros(theta.len());
    for i in 0..theta.len() {
        let h = cast::<T>(GRAD_STEP_REL) * (T::one() + theta[i].abs());
        let mut plus = theta.clone();
        plus[i] += h;
        let mut minus = theta.clone();
        minus[i] -= h;
        grad[i] = match (f(&plus), f(&minus)) {
            (Some(fp), Some(fm)) => (fp - fm) / (h + h),
            (Some(fp), None) => (fp - center) / h,
            (None, Some(fm)) => (center - fm) / h,
            (None, None) => T::zero(),
        };
    }
    grad
}
