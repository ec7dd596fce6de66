//! Solvers for the two-point steering fixed point `h(Pi) = P1`.

use nalgebra::{DMatrix, DVector};

use super::model::{costate_steering, WlsSolution};
use super::operator::{HhatContext, SymBasis};
use super::{alpha_to_eps, eps_to_alpha, geometric_grid, pi_seed};
use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, scaled_tol, SpdMatrix, SymMatrix};
use crate::path::split_norm_cost;
use crate::scalar::{cast, to_f64, Scalar};

/// Default number of Runge-Kutta steps for [`solve_continuation`].
pub const DEFAULT_CONTINUATION_STEPS: usize = 200;

/// Relative endpoint tolerance (times `|P1|_F`) accepted by the continuation
/// and sweep drivers.
const CONTINUATION_TOL_REL: f64 = 1e-8;

/// Relative endpoint tolerance (times `|P1|_F`) targeted by the Newton
/// refinement.
const LOCAL_TOL_REL: f64 = 1e-9;

/// Condition-number limit on the continuation stage systems.
const STAGE_CONDITION_LIMIT: f64 = 1e12;

/// Condition-number limit on the Newton step system.
const NEWTON_CONDITION_LIMIT: f64 = 1e14;

const MAX_NEWTON_ITERS: usize = 100;
const MAX_BACKTRACKS: usize = 40;
const ARMIJO_SLOPE: f64 = 1e-4;

/// Failure modes of [`solve_local`] that still carry the best iterate seen.
#[derive(Debug)]
pub enum LocalError<T: Scalar> {
    /// The line search could not reduce the residual further.
    Stagnation {
        /// Newton iterations completed.
        iterations: usize,
        /// Best iterate reached, with its residual.
        best: Box<WlsSolution<T>>,
    },
    /// A numerical operation failed outright.
    Numerical(Error),
}

impl<T: Scalar> LocalError<T> {
    /// The best iterate, if one was produced.
    pub fn best(&self) -> Option<&WlsSolution<T>> {
        match self {
            LocalError::Stagnation { best, .. } => Some(best),
            LocalError::Numerical(_) => None,
        }
    }
}

impl<T: Scalar> From<Error> for LocalError<T> {
    fn from(e: Error) -> Self {
        LocalError::Numerical(e)
    }
}

impl<T: Scalar> From<LocalError<T>> for Error {
    fn from(e: LocalError<T>) -> Self {
        match e {
            LocalError::Stagnation { iterations, best } => Error::Stagnation {
                iterations,
                residual: to_f64(best.residual),
            },
            LocalError::Numerical(e) => e,
        }
    }
}

fn add_scaled<T: Scalar>(base: &SymMatrix<T>, dir: &SymMatrix<T>, scale: T) -> SymMatrix<T> {
    SymMatrix::symmetrize(&(base.matrix() + dir.matrix() * scale))
}

/// Solves `mat * x = rhs` by SVD and reports the condition number.
fn svd_solve<T: Scalar>(mat: &DMatrix<T>, rhs: &DVector<T>) -> Result<(DVector<T>, T)> {
    let svd = mat.clone().svd(true, true);
    let (mut smin, mut smax) = (cast::<T>(f64::INFINITY), T::zero());
    for &s in svd.singular_values.iter() {
        smin = smin.min(s);
        smax = smax.max(s);
    }
    let condition = if smin <= T::zero() {
        cast::<T>(f64::INFINITY)
    } else {
        smax / smin
    };
    let x = svd
        .solve(rhs, T::default_epsilon() * smax)
        .map_err(|reason| Error::DegenerateParameter {
            reason: reason.to_string(),
        })?;
    Ok((x, condition))
}

fn build_solution<T: Scalar>(
    p0: &SpdMatrix<T>,
    pi: SymMatrix<T>,
    alpha: T,
    residual: T,
) -> Result<WlsSolution<T>> {
    let eps = alpha_to_eps(alpha)?;
    let a0 = costate_steering(p0, &pi, alpha)?;
    let cost = split_norm_cost(eps, &a0);
    Ok(WlsSolution {
        eps,
        alpha,
        p0: p0.clone(),
        pi,
        a0,
        residual,
        cost,
        branch: None,
    })
}

fn stagnation<T: Scalar>(
    p0: &SpdMatrix<T>,
    pi: &SymMatrix<T>,
    alpha: T,
    residual: T,
    iterations: usize,
) -> LocalError<T> {
    match build_solution(p0, pi.clone(), alpha, residual) {
        Ok(best) => LocalError::Stagnation {
            iterations,
            best: Box::new(best),
        },
        Err(e) => LocalError::Numerical(e),
    }
}

/// Damped Newton iteration on the endpoint residual `P1 - h(Pi)` from the
/// starting costate `init`.
///
/// Each step solves `(I - alpha H) Delta = B(R)` in basis coordinates, where
/// `H` is the fixed-point derivative and `B` the endpoint backmap of the
/// current [`HhatContext`], then backtracks (halving, up to 40 times) until
/// the residual satisfies an Armijo decrease. Converges to the relative
/// tolerance `1e-9 |P1|_F`; a step that cannot reduce the residual returns
/// [`LocalError::Stagnation`] carrying the best iterate.
pub fn solve_local<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    alpha: T,
    init: &SymMatrix<T>,
) -> Result<WlsSolution<T>, LocalError<T>> {
    check_same_dim(p0.dim(), p1.dim())?;
    check_same_dim(p0.dim(), init.dim())?;
    let tol = scaled_tol::<T>(LOCAL_TOL_REL) * p1.matrix().norm();
    let basis = SymBasis::new(p0.dim());
    let m = basis.len();

    let mut pi = init.clone();
    let mut ctx = HhatContext::new(p0, p1, &pi, alpha)?;
    let mut residual = ctx.residual_matrix();
    let mut r_norm = residual.matrix().norm();

    for iteration in 0..MAX_NEWTON_ITERS {
        if r_norm <= tol {
            return Ok(build_solution(p0, pi, alpha, r_norm)?);
        }

        let op = ctx.operator(&basis)?;
        let rhs = basis.coords(&ctx.endpoint_backmap(&residual)?);
        let lhs = DMatrix::identity(m, m) - op.matrix() * alpha;
        let (x, condition) = svd_solve(&lhs, &rhs)?;
        if condition > cast::<T>(NEWTON_CONDITION_LIMIT) {
            return Err(stagnation(p0, &pi, alpha, r_norm, iteration));
        }
        let delta = basis.matrix(&x);

        let mut accepted = None;
        let mut step = T::one();
        for _ in 0..=MAX_BACKTRACKS {
            let candidate = add_scaled(&pi, &delta, step);
            if let Ok(cand_ctx) = HhatContext::new(p0, p1, &candidate, alpha) {
                let cand_residual = cand_ctx.residual_matrix();
                let cand_norm = cand_residual.matrix().norm();
                if cand_norm <= (T::one() - cast::<T>(ARMIJO_SLOPE) * step) * r_norm {
                    accepted = Some((candidate, cand_ctx, cand_residual, cand_norm));
                    break;
                }
            }
            step *= cast::<T>(0.5);
        }
        match accepted {
            Some((candidate, cand_ctx, cand_residual, cand_norm)) => {
                pi = candidate;
                ctx = cand_ctx;
                residual = cand_residual;
                r_norm = cand_norm;
            }
            None => return Err(stagnation(p0, &pi, alpha, r_norm, iteration)),
        }
    }

    if r_norm <= tol {
        return Ok(build_solution(p0, pi, alpha, r_norm)?);
    }
    let best = build_solution(p0, pi, alpha, r_norm)?;
    Err(LocalError::Stagnation {
        iterations: MAX_NEWTON_ITERS,
        best: Box::new(best),
    })
}

/// Tracks the endpoint fixed point from `alpha = 0` to the requested `alpha`
/// and polishes the result with [`solve_local`].
///
/// The solution curve `Pi(tau)` for the scaled parameter `alpha tau`
/// satisfies the differential equation
/// `dPi/dtau = (I - alpha tau H)^{-1} (alpha H(Pi))`, integrated here with
/// `steps` classical Runge-Kutta steps from the exact seed [`pi_seed`]. A
/// stage system with condition number above `1e12` aborts with
/// [`Error::ContinuationBreakdown`]. The polished result must reach the
/// relative endpoint tolerance `1e-8 |P1|_F`.
pub fn solve_continuation<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    alpha: T,
    steps: usize,
) -> Result<WlsSolution<T>> {
    check_same_dim(p0.dim(), p1.dim())?;
    if steps == 0 {
        return Err(Error::InvalidArgument {
            reason: "continuation needs at least one step".into(),
        });
    }
    let basis = SymBasis::new(p0.dim());
    let m = basis.len();
    let dtau = T::one() / cast::<T>(steps as f64);

    let stage = |tau: T, pi: &SymMatrix<T>| -> Result<SymMatrix<T>> {
        let ctx = HhatContext::new(p0, p1, pi, alpha * tau)?;
        let op = ctx.operator(&basis)?;
        let rhs = basis.coords(&ctx.apply(pi)?) * alpha;
        let lhs = DMatrix::identity(m, m) - op.matrix() * (alpha * tau);
        let (x, condition) = svd_solve(&lhs, &rhs)?;
        if condition > cast::<T>(STAGE_CONDITION_LIMIT) {
            return Err(Error::ContinuationBreakdown {
                tau: to_f64(tau),
                condition: to_f64(condition),
            });
        }
        Ok(basis.matrix(&x))
    };

    let mut pi = pi_seed(p0, p1)?;
    let half = cast::<T>(0.5);
    let sixth = T::one() / cast::<T>(6.0);
    for k in 0..steps {
        let tau = cast::<T>(k as f64) * dtau;
        let k1 = stage(tau, &pi)?;
        let k2 = stage(tau + dtau * half, &add_scaled(&pi, &k1, dtau * half))?;
        let k3 = stage(tau + dtau * half, &add_scaled(&pi, &k2, dtau * half))?;
        let k4 = stage(tau + dtau, &add_scaled(&pi, &k3, dtau))?;
        let incr =
            k1.matrix() + k2.matrix() * cast::<T>(2.0) + k3.matrix() * cast::<T>(2.0) + k4.matrix();
        pi = SymMatrix::symmetrize(&(pi.matrix() + incr * (dtau * sixth)));
    }

    let tol = scaled_tol::<T>(CONTINUATION_TOL_REL) * p1.matrix().norm();
    match solve_local(p0, p1, alpha, &pi) {
        Ok(solution) => Ok(solution),
        Err(LocalError::Stagnation { best, .. }) if best.residual <= tol => Ok(*best),
        Err(LocalError::Stagnation { best, .. }) => Err(Error::NonConvergence {
            residual: to_f64(best.residual),
            tol: to_f64(tol),
        }),
        Err(LocalError::Numerical(e)) => Err(e),
    }
}

/// Solves the endpoint problem at each penalty weight in `eps_values`,
/// warm-starting every solve from the previous solution's costate.
///
/// This is how a solution branch selected by `init` is followed across
/// weights; stagnated solves are accepted if their residual still meets the
/// sweep tolerance `1e-8 |P1|_F`.
pub fn solve_eps_sweep<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    eps_values: &[T],
    init: &SymMatrix<T>,
) -> Result<Vec<WlsSolution<T>>> {
    let tol = scaled_tol::<T>(CONTINUATION_TOL_REL) * p1.matrix().norm();
    let mut pi = init.clone();
    let mut out = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let alpha = eps_to_alpha(eps)?;
        let solution = match solve_local(p0, p1, alpha, &pi) {
            Ok(s) => s,
            Err(LocalError::Stagnation { best, .. }) if best.residual <= tol => *best,
            Err(e) => return Err(e.into()),
        };
        pi = solution.pi.clone();
        out.push(solution);
    }
    Ok(out)
}

/// Solves at the target weight by sweeping geometrically from `eps_start`,
/// warm-starting from `init` (useful when a direct solve at `eps_target`
/// has no good starting point).
pub fn solve_homotopy<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    eps_target: T,
    eps_start: T,
    init: &SymMatrix<T>,
) -> Result<WlsSolution<T>> {
    if eps_start * eps_target <= T::zero() {
        return Err(Error::InvalidArgument {
            reason: "homotopy weights must be nonzero and share a sign".into(),
        });
    }
    let span = to_f64((eps_target / eps_start).abs().ln()).abs();
    let count = (span / 0.25_f64.ln_1p().abs()).ceil() as usize + 2;
    let grid = geometric_grid(eps_start, eps_target, count.max(2))?;
    let mut solutions = solve_eps_sweep(p0, p1, &grid, init)?;
    Ok(solutions.pop().expect("grid has at least two points"))
}
