//! Closed-form covariance geodesics between two SPD endpoints.
//!
//! Two families connect `P0` to `P1` in unit time:
//!
//! * [`GeodesicOmt`] — the transport geodesic
//!   `P(t) = (I - tQ) P0 (I - tQ)'` with
//!   `Q = I - P0^{-1/2}(P0^{1/2} P1 P0^{1/2})^{1/2} P0^{-1/2}`, which
//!   minimises the kinetic cost `tr(A P A')` and realises the
//!   Bures–Wasserstein distance. The same type also evaluates the wider
//!   fitting family in which `Q` is any square matrix with `I - tQ`
//!   invertible on `[0, 1]`.
//! * [`GeodesicInfo`] — the information geodesic
//!   `P(t) = e^{At} P0 e^{A't}` with constant
//!   `A = (1/2) P0^{1/2} log(P0^{-1/2} P1 P0^{-1/2}) P0^{-1/2}`, which
//!   realises the Fisher–Rao distance. With a free `A` it evaluates the
//!   exponential fitting family.
//!
//! [`WeightedOmtGeodesic`] solves the `W`-weighted transport problem by
//! conjugating the plain geodesic computed between `W^{1/2} Pi W^{1/2}`.

use nalgebra::DMatrix;

use crate::calculus::expm;
use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, GeneralMatrix, SpdMatrix};
use crate::path::CovariancePath;
use crate::scalar::{cast, to_f64, Scalar};

/// Number of grid points for the invertibility scan of `I - tQ`.
const FEASIBILITY_GRID: usize = 33;

/// Relative floor for `|det(I - tQ)|^{1/n}` below which the parameter is
/// rejected as infeasible.
const FEASIBILITY_FLOOR_REL: f64 = 1e-6;

fn check_omt_feasible<T: Scalar>(q: &DMatrix<T>) -> Result<()> {
    let n = q.nrows();
    let id = DMatrix::<T>::identity(n, n);
    for k in 0..FEASIBILITY_GRID {
        let t = cast::<T>(k as f64 / (FEASIBILITY_GRID - 1) as f64);
        let m = &id - q * t;
        let det_scale = m.determinant().abs().powf(T::one() / cast::<T>(n as f64));
        if det_scale < cast::<T>(FEASIBILITY_FLOOR_REL) * m.norm().max(T::one()) {
            return Err(Error::DegenerateParameter {
                reason: format!(
                    "I - tQ is near singular at t = {:.4} (det scale {:.3e})",
                    to_f64(t),
                    to_f64(det_scale)
                ),
            });
        }
    }
    Ok(())
}

/// Transport geodesic / linear-factor path `P(t) = (I - tQ) P0 (I - tQ)'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicOmt<T: Scalar> {
    p0: SpdMatrix<T>,
    q: GeneralMatrix<T>,
}

impl<T: Scalar> GeodesicOmt<T> {
    /// Transport geodesic from `p0` to `p1`.
    ///
    /// The parameter `Q = I - P0^{-1/2}(P0^{1/2} P1 P0^{1/2})^{1/2} P0^{-1/2}`
    /// is symmetric with eigenvalues strictly below one, so `I - tQ` stays
    /// invertible on `[0, 1]` and the endpoint interpolation is exact.
    pub fn connecting(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<Self> {
        check_same_dim(p0.dim(), p1.dim())?;
        let n = p0.dim();
        let p0_sqrt = p0.sqrt();
        let p0_isqrt = p0.inv_sqrt();
        let middle = SpdMatrix::new(p0_sqrt.matrix() * p1.matrix() * p0_sqrt.matrix())?;
        let q = DMatrix::identity(n, n)
            - p0_isqrt.matrix() * middle.sqrt().matrix() * p0_isqrt.matrix();
        Ok(Self {
            p0: p0.clone(),
            q: GeneralMatrix::new(q)?,
        })
    }

    /// Path with an explicit factor parameter `Q`, checked for invertibility
    /// of `I - tQ` on a `[0, 1]` grid.
    pub fn with_param(p0: SpdMatrix<T>, q: GeneralMatrix<T>) -> Result<Self> {
        check_same_dim(p0.dim(), q.dim())?;
        check_omt_feasible(q.matrix())?;
        Ok(Self { p0, q })
    }

    /// Start point.
    pub fn p0(&self) -> &SpdMatrix<T> {
        &self.p0
    }

    /// Factor parameter `Q`.
    pub fn param(&self) -> &GeneralMatrix<T> {
        &self.q
    }
}

impl<T: Scalar> CovariancePath<T> for GeodesicOmt<T> {
    fn dim(&self) -> usize {
        self.p0.dim()
    }

    fn eval_raw(&self, t: T) -> Result<DMatrix<T>> {
        let n = self.dim();
        let f = DMatrix::identity(n, n) - self.q.matrix() * t;
        Ok(&f * self.p0.matrix() * f.transpose())
    }

    fn steering(&self, t: T) -> Result<GeneralMatrix<T>> {
        let n = self.dim();
        let f = DMatrix::identity(n, n) - self.q.matrix() * t;
        let a = f.lu().solve(self.q.matrix()).map(|x| -x).ok_or_else(|| {
            Error::DegenerateParameter {
                reason: format!("I - tQ is singular at t = {:.4}", to_f64(t)),
            }
        })?;
        // -(I - tQ)^{-1} Q commutes with Q, so left and right quotients agree.
        Ok(GeneralMatrix::from_raw(a))
    }
}

/// Information geodesic / exponential path `P(t) = e^{At} P0 e^{A't}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicInfo<T: Scalar> {
    p0: SpdMatrix<T>,
    a: GeneralMatrix<T>,
}

impl<T: Scalar> GeodesicInfo<T> {
    /// Information geodesic from `p0` to `p1`, with the constant steering
    /// `A = (1/2) P0^{1/2} log(P0^{-1/2} P1 P0^{-1/2}) P0^{-1/2}`.
    pub fn connecting(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>) -> Result<Self> {
        check_same_dim(p0.dim(), p1.dim())?;
        let p0_sqrt = p0.sqrt();
        let p0_isqrt = p0.inv_sqrt();
        let whitened = SpdMatrix::new(p0_isqrt.matrix() * p1.matrix() * p0_isqrt.matrix())?;
        let a = p0_sqrt.matrix() * whitened.log().matrix() * p0_isqrt.matrix() * cast::<T>(0.5);
        Ok(Self {
            p0: p0.clone(),
            a: GeneralMatrix::new(a)?,
        })
    }

    /// Path with an explicit constant steering matrix.
    pub fn with_param(p0: SpdMatrix<T>, a: GeneralMatrix<T>) -> Result<Self> {
        check_same_dim(p0.dim(), a.dim())?;
        Ok(Self { p0, a })
    }

    /// Start point.
    pub fn p0(&self) -> &SpdMatrix<T> {
        &self.p0
    }

    /// Constant steering matrix.
    pub fn param(&self) -> &GeneralMatrix<T> {
        &self.a
    }
}

impl<T: Scalar> CovariancePath<T> for GeodesicInfo<T> {
    fn dim(&self) -> usize {
        self.p0.dim()
    }

    fn eval_raw(&self, t: T) -> Result<DMatrix<T>> {
        let e = expm(&(self.a.matrix() * t));
        Ok(&e * self.p0.matrix() * e.transpose())
    }

    fn steering(&self, _t: T) -> Result<GeneralMatrix<T>> {
        Ok(self.a.clone())
    }

    fn sample_raw(&self, times: &[T]) -> Result<Vec<DMatrix<T>>> {
        if let Some(step) = uniform_step(times) {
            let e_step = expm(&(self.a.matrix() * step));
            let mut e = expm(&(self.a.matrix() * times[0]));
            let mut out = Vec::with_capacity(times.len());
            for _ in times {
                out.push(&e * self.p0.matrix() * e.transpose());
                e = &e_step * e;
            }
            return Ok(out);
        }
        times.iter().map(|&t| self.eval_raw(t)).collect()
    }
}

/// Detects a uniform time grid and returns its step.
pub(crate) fn uniform_step<T: Scalar>(times: &[T]) -> Option<T> {
    if times.len() < 3 {
        return None;
    }
    let step = times[1] - times[0];
    let tol = cast::<T>(1e-12) * (T::one() + step.abs());
    for k in 1..times.len() {
        let expected = times[0] + step * cast::<T>(k as f64);
        if (times[k] - expected).abs() > tol {
            return None;
        }
    }
    Some(step)
}

/// Transport geodesic under a weighted cost `tr(W A P A')`.
///
/// The weighted problem reduces to the plain one between
/// `W^{1/2} P0 W^{1/2}` and `W^{1/2} P1 W^{1/2}`; the path and steering are
/// conjugated back by `W^{-1/2}`.
#[derive(Debug, Clone)]
pub struct WeightedOmtGeodesic<T: Scalar> {
    w_sqrt: SpdMatrix<T>,
    w_isqrt: SpdMatrix<T>,
    inner: GeodesicOmt<T>,
}

impl<T: Scalar> WeightedOmtGeodesic<T> {
    /// Weighted transport geodesic from `p0` to `p1` with SPD weight `w`.
    pub fn connecting(p0: &SpdMatrix<T>, p1: &SpdMatrix<T>, w: &SpdMatrix<T>) -> Result<Self> {
        check_same_dim(p0.dim(), p1.dim())?;
        check_same_dim(p0.dim(), w.dim())?;
        let w_sqrt = w.sqrt();
        let w_isqrt = w.inv_sqrt();
        let lift =
            |p: &SpdMatrix<T>| SpdMatrix::new(w_sqrt.matrix() * p.matrix() * w_sqrt.matrix());
        let inner = GeodesicOmt::connecting(&lift(p0)?, &lift(p1)?)?;
        Ok(Self {
            w_sqrt,
            w_isqrt,
            inner,
        })
    }

    /// The geodesic between the weighted endpoints `W^{1/2} Pi W^{1/2}`.
    pub fn lifted(&self) -> &GeodesicOmt<T> {
        &self.inner
    }
}

impl<T: Scalar> CovariancePath<T> for WeightedOmtGeodesic<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_raw(&self, t: T) -> Result<DMatrix<T>> {
        let lifted = self.inner.eval_raw(t)?;
        Ok(self.w_isqrt.matrix() * lifted * self.w_isqrt.matrix())
    }

    fn steering(&self, t: T) -> Result<GeneralMatrix<T>> {
        let lifted = self.inner.steering(t)?;
        Ok(GeneralMatrix::from_raw(
            self.w_isqrt.matrix() * lifted.matrix() * self.w_sqrt.matrix(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{bw_distance, fr_distance};
    use crate::path::{path_cost, RunningCost, DEFAULT_QUAD_POINTS};
    use crate::testutil::random_spd;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn diag_pair() -> (SpdMatrix<f64>, SpdMatrix<f64>) {
        (
            SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap(),
            SpdMatrix::from_diagonal(&[2.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn omt_geodesic_diagonal_closed_form() {
        let (p0, p1) = diag_pair();
        let g = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let r2 = 2.0_f64.sqrt();
        for k in 0..=32 {
            let t = k as f64 / 32.0;
            let p = g.eval(t).unwrap();
            let d0 = (1.0 + (r2 - 1.0) * t).powi(2);
            let d1 = (r2 + (1.0 - r2) * t).powi(2);
            assert_relative_eq!(p.matrix()[(0, 0)], d0, max_relative = 1e-12);
            assert_relative_eq!(p.matrix()[(1, 1)], d1, max_relative = 1e-12);
            assert!(p.matrix()[(0, 1)].abs() < 1e-12);
        }
        let mid = g.eval(0.5).unwrap();
        let expected = ((1.0 + r2) / 2.0).powi(2);
        assert_relative_eq!(mid.matrix()[(0, 0)], expected, max_relative = 1e-12);
        assert_relative_eq!(mid.matrix()[(1, 1)], expected, max_relative = 1e-12);
    }

    #[test]
    fn omt_steering_at_zero() {
        let (p0, p1) = diag_pair();
        let g = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let a0 = g.steering(0.0).unwrap();
        let r2 = 2.0_f64.sqrt();
        assert_relative_eq!(a0.matrix()[(0, 0)], r2 - 1.0, max_relative = 1e-12);
        assert_relative_eq!(a0.matrix()[(1, 1)], (1.0 - r2) / r2, max_relative = 1e-12);
    }

    #[test]
    fn info_geodesic_diagonal_closed_form() {
        let (p0, p1) = diag_pair();
        let g = GeodesicInfo::connecting(&p0, &p1).unwrap();
        for k in 0..=32 {
            let t = k as f64 / 32.0;
            let p = g.eval(t).unwrap();
            assert_relative_eq!(p.matrix()[(0, 0)], 2.0_f64.powf(t), max_relative = 1e-12);
            assert_relative_eq!(
                p.matrix()[(1, 1)],
                2.0_f64.powf(1.0 - t),
                max_relative = 1e-12
            );
            assert!(p.matrix()[(0, 1)].abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_interpolate_for_random_pairs() {
        let mut rng = StdRng::seed_from_u64(61);
        for _ in 0..10 {
            let p0 = random_spd(&mut rng, 4);
            let p1 = random_spd(&mut rng, 4);
            for path in [
                Box::new(GeodesicOmt::connecting(&p0, &p1).unwrap())
                    as Box<dyn CovariancePath<f64>>,
                Box::new(GeodesicInfo::connecting(&p0, &p1).unwrap()),
            ] {
                let start = path.eval(0.0).unwrap();
                let end = path.eval(1.0).unwrap();
                let rel0 = (start.matrix() - p0.matrix()).norm() / p0.matrix().norm();
                let rel1 = (end.matrix() - p1.matrix()).norm() / p1.matrix().norm();
                assert!(rel0 < 1e-10, "start residual {rel0}");
                assert!(rel1 < 1e-10, "end residual {rel1}");
            }
        }
    }

    #[test]
    fn omt_param_eigenvalues_below_one() {
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..10 {
            let p0 = random_spd(&mut rng, 3);
            let p1 = random_spd(&mut rng, 3);
            let g = GeodesicOmt::connecting(&p0, &p1).unwrap();
            let q = crate::matrix::SymMatrix::new(g.param().matrix().clone()).unwrap();
            let max_eig = q.eigenvalues()[2];
            assert!(max_eig < 1.0, "Q eigenvalue {max_eig} not below one");
        }
    }

    #[test]
    fn steering_reproduces_flow_derivative() {
        let mut rng = StdRng::seed_from_u64(71);
        let p0 = random_spd(&mut rng, 3);
        let p1 = random_spd(&mut rng, 3);
        let h = 1e-6;
        for t in [0.2, 0.5, 0.8] {
            for path in [
                Box::new(GeodesicOmt::connecting(&p0, &p1).unwrap())
                    as Box<dyn CovariancePath<f64>>,
                Box::new(GeodesicInfo::connecting(&p0, &p1).unwrap()),
            ] {
                let fd =
                    (path.eval_raw(t + h).unwrap() - path.eval_raw(t - h).unwrap()) / (2.0 * h);
                let p = path.eval_raw(t).unwrap();
                let a = path.steering(t).unwrap();
                let flow = a.matrix() * &p + &p * a.matrix().transpose();
                assert_relative_eq!(&fd, &flow, epsilon = 1e-6 * (1.0 + flow.norm()));
            }
        }
    }

    #[test]
    fn path_costs_match_squared_distances() {
        let mut rng = StdRng::seed_from_u64(73);
        for _ in 0..5 {
            let p0 = random_spd(&mut rng, 3);
            let p1 = random_spd(&mut rng, 3);
            let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
            let cost = path_cost(&omt, &RunningCost::Transport, DEFAULT_QUAD_POINTS).unwrap();
            let bw = bw_distance(&p0, &p1).unwrap();
            assert_relative_eq!(cost, bw * bw, max_relative = 1e-8);

            let info = GeodesicInfo::connecting(&p0, &p1).unwrap();
            let fr = fr_distance(&p0, &p1).unwrap();
            for kind in [RunningCost::FisherRao, RunningCost::FisherRaoTransport] {
                let cost = path_cost(&info, &kind, DEFAULT_QUAD_POINTS).unwrap();
                assert_relative_eq!(cost, fr * fr, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn quadrature_node_doubling_is_stable() {
        let (p0, p1) = diag_pair();
        let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let c64 = path_cost(&omt, &RunningCost::Transport, 64).unwrap();
        let c128 = path_cost(&omt, &RunningCost::Transport, 128).unwrap();
        assert!((c64 - c128).abs() < 1e-10);
    }

    #[test]
    fn weighted_geodesic_reduces_to_plain_for_identity_weight() {
        let mut rng = StdRng::seed_from_u64(79);
        let p0 = random_spd(&mut rng, 3);
        let p1 = random_spd(&mut rng, 3);
        let w = SpdMatrix::identity(3);
        let plain = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let weighted = WeightedOmtGeodesic::connecting(&p0, &p1, &w).unwrap();
        for t in [0.0, 0.3, 0.7, 1.0] {
            assert_relative_eq!(
                &weighted.eval_raw(t).unwrap(),
                &plain.eval_raw(t).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn weighted_geodesic_beats_plain_geodesic_under_weighted_cost() {
        let mut rng = StdRng::seed_from_u64(83);
        for _ in 0..5 {
            let p0 = random_spd(&mut rng, 3);
            let p1 = random_spd(&mut rng, 3);
            let w = random_spd(&mut rng, 3);
            let weighted = WeightedOmtGeodesic::connecting(&p0, &p1, &w).unwrap();
            let plain = GeodesicOmt::connecting(&p0, &p1).unwrap();
            let kind = RunningCost::WeightedTransport(w.clone());
            let optimal = path_cost(&weighted, &kind, DEFAULT_QUAD_POINTS).unwrap();
            let other = path_cost(&plain, &kind, DEFAULT_QUAD_POINTS).unwrap();
            assert!(
                optimal <= other + 1e-9,
                "weighted geodesic cost {optimal} exceeds plain path cost {other}"
            );
            // Endpoints still interpolate.
            let end = weighted.eval(1.0).unwrap();
            assert_relative_eq!(end.matrix(), p1.matrix(), epsilon = 1e-9 * p1.lambda_max());
        }
    }

    #[test]
    fn with_param_rejects_singular_factor() {
        let p0 = SpdMatrix::<f64>::identity(2);
        // Q = I makes I - tQ singular at t = 1.
        let q = GeneralMatrix::identity(2);
        assert!(matches!(
            GeodesicOmt::with_param(p0, q).unwrap_err(),
            Error::DegenerateParameter { .. }
        ));
    }

    #[test]
    fn uniform_sampling_matches_pointwise_evaluation() {
        let mut rng = StdRng::seed_from_u64(89);
        let p0 = random_spd(&mut rng, 3);
        let p1 = random_spd(&mut rng, 3);
        let g = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let times: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
        let fast = g.sample_raw(&times).unwrap();
        for (k, t) in times.iter().enumerate() {
            assert_relative_eq!(&fast[k], &g.eval_raw(*t).unwrap(), epsilon = 1e-11);
        }
    }
}
