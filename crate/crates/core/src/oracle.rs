//! Independent numerical ground truth for paths and costs.
//!
//! Everything here deliberately avoids the closed-form machinery used by the
//! path families: the flow `dP/dt = A(t) P + P A(t)'` is integrated with a
//! fixed-step Runge-Kutta scheme, running costs are integrated with composite
//! Simpson quadrature on explicit samples, and [`perturbed_feasible_path`]
//! produces endpoint-preserving competitor paths for optimality checks.
//! [`verify_parametric`] and [`verify_sampled`] diff a claimed model or
//! sample set against these independent routes and produce the
//! [`VerifyReport`] consumed by the command-line `verify` subcommand.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesics::{uniform_step, GeodesicInfo};
use crate::matrix::{spd_exp, GeneralMatrix, SpdMatrix, SymMatrix};
use crate::path::{CovariancePath, RunningCost};
use crate::scalar::{cast, to_f64, Scalar};

/// Default Runge-Kutta step count for [`integrate_flow`].
pub const DEFAULT_FLOW_STEPS: usize = 1000;

/// Number of samples produced by [`perturbed_feasible_path`].
pub const PERTURBED_SAMPLES: usize = 401;

/// Grid size for the model checks in [`verify_parametric`].
const VERIFY_GRID: usize = 33;

/// Central-difference step for the parametric flow check.
const VERIFY_FD_STEP: f64 = 1e-5;

/// A covariance path discretised on an increasing time grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SampledPath<T: Scalar> {
    times: Vec<T>,
    matrices: Vec<SpdMatrix<T>>,
}

impl<T: Scalar> SampledPath<T> {
    /// Validates the grid (starts at 0, ends at 1, strictly increasing) and
    /// the shared dimension of the samples.
    pub fn new(times: Vec<T>, matrices: Vec<SpdMatrix<T>>) -> Result<Self> {
        if times.len() != matrices.len() || times.len() < 2 {
            return Err(Error::InvalidArgument {
                reason: format!(
                    "sampled path needs matching times and matrices (at least 2), got {} and {}",
                    times.len(),
                    matrices.len()
                ),
            });
        }
        let edge_tol = cast::<T>(1e-12);
        if times[0].abs() > edge_tol || (times[times.len() - 1] - T::one()).abs() > edge_tol {
            return Err(Error::InvalidArgument {
                reason: "sampled path times must start at 0 and end at 1".into(),
            });
        }
        for pair in times.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidArgument {
                    reason: "sampled path times must be strictly increasing".into(),
                });
            }
        }
        let dim = matrices[0].dim();
        for m in &matrices {
            crate::matrix::check_same_dim(dim, m.dim())?;
        }
        Ok(Self { times, matrices })
    }

    /// Time grid.
    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Path samples, one per time.
    pub fn matrices(&self) -> &[SpdMatrix<T>] {
        &self.matrices
    }

    /// Matrix side length.
    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// Whether the path has no samples (never true for validated paths).
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates the covariance flow `dP/dt = A(t) P + P A(t)'` from `p0` over
/// `[0, 1]` with classical Runge-Kutta.
///
/// Symmetry is re-enforced after every step and each accepted state is
/// validated as SPD; a state that loses definiteness aborts with
/// [`Error::PositivityLost`] naming the failing time.
pub fn integrate_flow<T: Scalar>(
    p0: &SpdMatrix<T>,
    mut steering: impl FnMut(T) -> Result<GeneralMatrix<T>>,
    steps: usize,
) -> Result<SampledPath<T>> {
    if steps < 10 {
        return Err(Error::InvalidArgument {
            reason: format!("flow integration needs at least 10 steps, got {steps}"),
        });
    }
    let h = T::one() / cast::<T>(steps as f64);
    let half = cast::<T>(0.5);
    let sixth = T::one() / cast::<T>(6.0);

    let mut rate = |t: T, p: &DMatrix<T>| -> Result<DMatrix<T>> {
        let a = steering(t)?;
        Ok(a.matrix() * p + p * a.matrix().transpose())
    };

    let mut times = Vec::with_capacity(steps + 1);
    let mut matrices = Vec::with_capacity(steps + 1);
    times.push(T::zero());
    matrices.push(p0.clone());

    let mut p = p0.matrix().clone();
    for k in 0..steps {
        let t = cast::<T>(k as f64) * h;
        let k1 = rate(t, &p)?;
        let k2 = rate(t + h * half, &(&p + &k1 * (h * half)))?;
        let k3 = rate(t + h * half, &(&p + &k2 * (h * half)))?;
        let k4 = rate(t + h, &(&p + &k3 * h))?;
        p += (k1 + k2 * cast::<T>(2.0) + k3 * cast::<T>(2.0) + k4) * (h * sixth);
        let symmetrized = SymMatrix::symmetrize(&p);
        p = symmetrized.matrix().clone();
        let t_next = cast::<T>((k + 1) as f64) * h;
        let spd = SpdMatrix::from_sym(symmetrized).map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => Error::PositivityLost { t: to_f64(t_next) },
            other => other,
        })?;
        times.push(if k + 1 == steps { T::one() } else { t_next });
        matrices.push(spd);
    }
    SampledPath::new(times, matrices)
}

/// Endpoint-preserving competitor path for optimality checks.
///
/// Conjugates the information geodesic between the endpoints by
/// `G(t) = exp(B t(1-t))` for a seeded random symmetric `B`, so `P(0)` and
/// `P(1)` are untouched while the interior is deformed. The returned steering
/// samples are the symmetric-part representations `A(t) = (1/2) dP/dt P^{-1}`
/// computed from the analytic derivative, which give the smallest
/// transport-type and information-type running costs among all steerings
/// generating the same flow.
pub fn perturbed_feasible_path<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    seed: u64,
) -> Result<(SampledPath<T>, Vec<GeneralMatrix<T>>)> {
    let n = p0.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x: f64 = StandardNormal.sample(&mut rng);
            let v = cast::<T>(0.4 * x);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    perturbed_path_with_generator(p0, p1, &SymMatrix::symmetrize(&b))
}

/// [`perturbed_feasible_path`] with an explicit symmetric generator `b`
/// instead of a seeded random one. A zero generator reproduces the
/// information geodesic exactly.
pub fn perturbed_path_with_generator<T: Scalar>(
    p0: &SpdMatrix<T>,
    p1: &SpdMatrix<T>,
    b: &SymMatrix<T>,
) -> Result<(SampledPath<T>, Vec<GeneralMatrix<T>>)> {
    crate::matrix::check_same_dim(p0.dim(), b.dim())?;
    let geo = GeodesicInfo::connecting(p0, p1)?;
    let a_info = geo.param().matrix().clone();
    let b = b.matrix();

    let count = PERTURBED_SAMPLES;
    let mut times = Vec::with_capacity(count);
    let mut matrices = Vec::with_capacity(count);
    let mut steering = Vec::with_capacity(count);
    for k in 0..count {
        let t = cast::<T>(k as f64 / (count - 1) as f64);
        let bump = t * (T::one() - t);
        let bump_rate = T::one() - cast::<T>(2.0) * t;
        let g = spd_exp(&SymMatrix::symmetrize(&(b * bump)));
        let p_base = geo.eval_raw(t)?;
        let p = g.matrix() * &p_base * g.matrix();
        let base_flow = &a_info * &p_base + &p_base * a_info.transpose();
        let pdot = (b * &p + &p * b) * bump_rate + g.matrix() * base_flow * g.matrix();
        let spd = SpdMatrix::new(p)?;
        let a = pdot * spd.inverse().matrix() * cast::<T>(0.5);
        times.push(t);
        matrices.push(spd);
        steering.push(GeneralMatrix::from_raw(a));
    }
    Ok((SampledPath::new(times, matrices)?, steering))
}

/// Integrates a running cost along a sampled path with composite Simpson
/// quadrature.
///
/// Requires a uniform grid with an odd number of samples and one steering
/// matrix per sample.
pub fn quadrature_cost<T: Scalar>(
    path: &SampledPath<T>,
    steering: &[GeneralMatrix<T>],
    cost: &RunningCost<T>,
) -> Result<T> {
    let count = path.len();
    if steering.len() != count {
        return Err(Error::InvalidArgument {
            reason: format!(
                "steering sample count {} does not match path sample count {count}",
                steering.len()
            ),
        });
    }
    if count < 3 || count.is_multiple_of(2) {
        return Err(Error::InvalidArgument {
            reason: format!("Simpson quadrature needs an odd sample count >= 3, got {count}"),
        });
    }
    let h = uniform_step(path.times()).ok_or_else(|| Error::InvalidArgument {
        reason: "Simpson quadrature needs a uniform time grid".into(),
    })?;
    let mut total = T::zero();
    for (k, (p, a)) in path.matrices().iter().zip(steering).enumerate() {
        let weight = if k == 0 || k + 1 == count {
            T::one()
        } else if k % 2 == 1 {
            cast::<T>(4.0)
        } else {
            cast::<T>(2.0)
        };
        total += weight * cost.eval(p, a)?;
    }
    Ok(total * h / cast::<T>(3.0))
}

/// Outcome of a model or sample verification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct VerifyReport<T: Scalar> {
    /// Worst relative deviation between the model and the stored first/last
    /// samples (zero when no samples are stored).
    pub endpoint_residual: T,
    /// Worst relative flow-consistency residual
    /// `|dP/dt - (A P + P A')| / (1 + |A P + P A'|)` over the check grid.
    pub flow_residual: T,
    /// Worst relative drift of the running cost along the path; absent for
    /// sample-only inputs whose cost family is unknown.
    pub cost_constancy: Option<T>,
    /// Whether every computed residual met its tolerance.
    pub pass: bool,
    /// Seed of the randomised construction under verification, if any.
    pub seed: Option<u64>,
}

fn relative_gap<T: Scalar>(got: &DMatrix<T>, want: &DMatrix<T>) -> T {
    (got - want).norm() / want.norm().max(T::one())
}

/// Checks a parametric path model against its flow equation, its constant
/// running cost, and (when provided) stored samples of itself.
///
/// The flow is differentiated centrally with step `1e-5` on a 33-point grid;
/// all residuals are relative. `pass` requires every residual to stay within
/// `tol`.
pub fn verify_parametric<T: Scalar>(
    path: &impl CovariancePath<T>,
    cost: &RunningCost<T>,
    times: &[T],
    samples: &[SymMatrix<T>],
    tol: T,
) -> Result<VerifyReport<T>> {
    if times.len() != samples.len() {
        return Err(Error::InvalidArgument {
            reason: format!(
                "sample count {} does not match time count {}",
                samples.len(),
                times.len()
            ),
        });
    }

    let mut endpoint_residual = T::zero();
    if !times.is_empty() {
        for idx in [0, times.len() - 1] {
            let got = path.eval_raw(times[idx])?;
            endpoint_residual = endpoint_residual.max(relative_gap(&got, samples[idx].matrix()));
        }
    }

    let h = cast::<T>(VERIFY_FD_STEP);
    let mut flow_residual = T::zero();
    let mut rate0 = T::zero();
    let mut cost_drift = T::zero();
    for j in 0..VERIFY_GRID {
        let t = cast::<T>(j as f64 / (VERIFY_GRID - 1) as f64);
        let p = path.eval(t)?;
        let a = path.steering(t)?;

        let fd = (path.eval_raw(t + h)? - path.eval_raw(t - h)?) / (h * cast::<T>(2.0));
        let flow = a.matrix() * p.matrix() + p.matrix() * a.matrix().transpose();
        flow_residual = flow_residual.max((fd - &flow).norm() / (T::one() + flow.norm()));

        let rate = cost.eval(&p, &a)?;
        if j == 0 {
            rate0 = rate;
        } else {
            cost_drift = cost_drift.max((rate - rate0).abs() / (T::one() + rate0.abs()));
        }
    }

    let pass = endpoint_residual <= tol && flow_residual <= tol && cost_drift <= tol;
    Ok(VerifyReport {
        endpoint_residual,
        flow_residual,
        cost_constancy: Some(cost_drift),
        pass,
        seed: None,
    })
}

/// Checks stored samples for flow consistency by finite differences.
///
/// Without steering samples the check is vacuous. The finite-difference
/// truncation error scales with the squared grid spacing, so the effective
/// flow tolerance is `max(tol, 4 h^2)` for the largest spacing `h`.
pub fn verify_sampled<T: Scalar>(
    times: &[T],
    samples: &[SymMatrix<T>],
    steering: Option<&[GeneralMatrix<T>]>,
    tol: T,
) -> Result<VerifyReport<T>> {
    if times.len() != samples.len() || times.len() < 2 {
        return Err(Error::InvalidArgument {
            reason: "sample verification needs matching times and matrices (at least 2)".into(),
        });
    }
    if let Some(steer) = steering {
        if steer.len() != times.len() {
            return Err(Error::InvalidArgument {
                reason: "steering sample count does not match time count".into(),
            });
        }
    }
    for pair in times.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument {
                reason: "sample times must be strictly increasing".into(),
            });
        }
    }

    let mut flow_residual = T::zero();
    let mut h_max = T::zero();
    for pair in times.windows(2) {
        h_max = h_max.max(pair[1] - pair[0]);
    }
    if let Some(steer) = steering {
        for k in 1..times.len() - 1 {
            let span = times[k + 1] - times[k - 1];
            let fd = (samples[k + 1].matrix() - samples[k - 1].matrix()) / span;
            let flow = steer[k].matrix() * samples[k].matrix()
                + samples[k].matrix() * steer[k].matrix().transpose();
            flow_residual = flow_residual.max((fd - &flow).norm() / (T::one() + flow.norm()));
        }
    }

    let flow_tol = tol.max(cast::<T>(4.0) * h_max * h_max);
    Ok(VerifyReport {
        endpoint_residual: T::zero(),
        flow_residual,
        cost_constancy: None,
        pass: flow_residual <= flow_tol,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::GeodesicOmt;
    use crate::metrics::{bw_distance, fr_distance};
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
    fn zero_steering_keeps_path_constant() {
        let p0 = SpdMatrix::from_diagonal(&[1.5, 0.5]).unwrap();
        let flow = integrate_flow(&p0, |_| Ok(GeneralMatrix::zeros(2)), 100).unwrap();
        for m in flow.matrices() {
            assert_relative_eq!(m.matrix(), p0.matrix(), epsilon = 1e-13);
        }
    }

    #[test]
    fn constant_symmetric_steering_reaches_exponential_endpoint() {
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, -0.2]);
        let p0 = SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap();
        let steering = GeneralMatrix::new(a.clone()).unwrap();
        let flow = integrate_flow(&p0, |_| Ok(steering.clone()), DEFAULT_FLOW_STEPS).unwrap();
        let e = a.exp();
        let expected = &e * p0.matrix() * e.transpose();
        let end = flow.matrices().last().unwrap();
        assert_relative_eq!(end.matrix(), &expected, epsilon = 1e-9);
    }

    #[test]
    fn transport_steering_integrates_to_target_endpoint() {
        let (p0, p1) = diag_pair();
        let geo = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let flow = integrate_flow(&p0, |t| geo.steering(t), DEFAULT_FLOW_STEPS).unwrap();
        let end = flow.matrices().last().unwrap();
        assert_relative_eq!(end.matrix(), p1.matrix(), epsilon = 1e-8);
    }

    #[test]
    fn step_halving_is_stable_at_the_endpoint() {
        let mut rng = StdRng::seed_from_u64(179);
        let p0 = random_spd(&mut rng, 3);
        let p1 = random_spd(&mut rng, 3);
        let geo = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let coarse = integrate_flow(&p0, |t| geo.steering(t), 500).unwrap();
        let fine = integrate_flow(&p0, |t| geo.steering(t), 1000).unwrap();
        let gap = (coarse.matrices().last().unwrap().matrix()
            - fine.matrices().last().unwrap().matrix())
        .norm();
        assert!(gap < 1e-8, "endpoint moved by {gap} under step halving");
    }

    #[test]
    fn severe_anisotropic_contraction_reports_positivity_loss() {
        let p0 = SpdMatrix::identity(2);
        let a =
            GeneralMatrix::new(DMatrix::from_row_slice(2, 2, &[-100.0, 0.0, 0.0, 0.0])).unwrap();
        let err = integrate_flow(&p0, |_| Ok(a.clone()), DEFAULT_FLOW_STEPS).unwrap_err();
        match err {
            Error::PositivityLost { t } => assert!(t > 0.0 && t < 1.0, "odd failure time {t}"),
            other => panic!("expected positivity loss, got {other}"),
        }
    }

    #[test]
    fn simpson_cost_matches_reference_values() {
        let (p0, p1) = diag_pair();

        let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let times: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let matrices: Vec<SpdMatrix<f64>> = times.iter().map(|&t| omt.eval(t).unwrap()).collect();
        let steering: Vec<GeneralMatrix<f64>> =
            times.iter().map(|&t| omt.steering(t).unwrap()).collect();
        let path = SampledPath::new(times.clone(), matrices).unwrap();
        let cost = quadrature_cost(&path, &steering, &RunningCost::Transport).unwrap();
        let bw = bw_distance(&p0, &p1).unwrap();
        assert_relative_eq!(cost, bw * bw, epsilon = 1e-7);
        assert_relative_eq!(cost, 6.0 - 4.0 * 2.0_f64.sqrt(), epsilon = 1e-7);

        let info = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let matrices: Vec<SpdMatrix<f64>> = times.iter().map(|&t| info.eval(t).unwrap()).collect();
        let steering: Vec<GeneralMatrix<f64>> =
            times.iter().map(|&t| info.steering(t).unwrap()).collect();
        let path = SampledPath::new(times, matrices).unwrap();
        let cost = quadrature_cost(&path, &steering, &RunningCost::FisherRaoTransport).unwrap();
        let fr = fr_distance(&p0, &p1).unwrap();
        assert_relative_eq!(cost, fr * fr, epsilon = 1e-7);
        assert_relative_eq!(cost, 2.0 * 2.0_f64.ln().powi(2), epsilon = 1e-7);
    }

    #[test]
    fn constant_path_has_zero_cost() {
        let times: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let p = SpdMatrix::from_diagonal(&[1.0, 3.0]).unwrap();
        let path = SampledPath::new(times.clone(), vec![p; 9]).unwrap();
        let steering = vec![GeneralMatrix::zeros(2); 9];
        let cost = quadrature_cost(&path, &steering, &RunningCost::Transport).unwrap();
        assert!(cost.abs() < 1e-15);
    }

    #[test]
    fn perturbed_path_preserves_endpoints_and_dominates_geodesic_cost() {
        let mut rng = StdRng::seed_from_u64(181);
        let p0 = random_spd(&mut rng, 3);
        let p1 = random_spd(&mut rng, 3);
        let fr = fr_distance(&p0, &p1).unwrap();
        let bw = bw_distance(&p0, &p1).unwrap();
        for seed in 0..5u64 {
            let (path, steering) = perturbed_feasible_path(&p0, &p1, seed).unwrap();
            let start = path.matrices().first().unwrap();
            let end = path.matrices().last().unwrap();
            assert!((start.matrix() - p0.matrix()).norm() <= 1e-10 * p0.matrix().norm());
            assert!((end.matrix() - p1.matrix()).norm() <= 1e-10 * p1.matrix().norm());

            let info_cost = quadrature_cost(&path, &steering, &RunningCost::FisherRao).unwrap();
            assert!(
                info_cost >= fr * fr - 1e-9,
                "seed {seed}: information cost {info_cost} under geodesic {}",
                fr * fr
            );
            let transport_cost =
                quadrature_cost(&path, &steering, &RunningCost::Transport).unwrap();
            assert!(
                transport_cost >= bw * bw - 1e-9,
                "seed {seed}: transport cost {transport_cost} under geodesic {}",
                bw * bw
            );
        }
    }

    #[test]
    fn zero_perturbation_recovers_information_geodesic() {
        let (p0, p1) = diag_pair();
        let geo = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let zero = SymMatrix::zeros(2);
        let (path, steering) = perturbed_path_with_generator(&p0, &p1, &zero).unwrap();
        assert_eq!(path.len(), PERTURBED_SAMPLES);
        for (k, &t) in path.times().iter().enumerate() {
            let expected = geo.eval_raw(t).unwrap();
            assert_relative_eq!(path.matrices()[k].matrix(), &expected, epsilon = 1e-11);
            // With no perturbation the symmetric-part steering collapses to
            // the geodesic's constant steering matrix.
            assert_relative_eq!(steering[k].matrix(), geo.param().matrix(), epsilon = 1e-10);
        }
    }

    #[test]
    fn verify_accepts_exact_geodesic_and_rejects_corruption() {
        let (p0, p1) = diag_pair();
        let geo = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let times: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
        let samples: Vec<SymMatrix<f64>> = times
            .iter()
            .map(|&t| geo.eval(t).unwrap().to_sym())
            .collect();
        let report =
            verify_parametric(&geo, &RunningCost::FisherRao, &times, &samples, 1e-8).unwrap();
        assert!(report.pass, "exact geodesic failed verify: {report:?}");

        let mut bad_a = geo.param().matrix().clone();
        bad_a[(0, 1)] += 0.1;
        let bad = GeodesicInfo::with_param(p0.clone(), GeneralMatrix::new(bad_a).unwrap()).unwrap();
        let report =
            verify_parametric(&bad, &RunningCost::FisherRao, &times, &samples, 1e-6).unwrap();
        assert!(!report.pass);
        assert!(report.endpoint_residual > 1e-3);
    }

    #[test]
    fn sampled_verification_uses_truncation_floor() {
        let (p0, p1) = diag_pair();
        let geo = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let times: Vec<f64> = (0..=32).map(|k| k as f64 / 32.0).collect();
        let samples: Vec<SymMatrix<f64>> = times
            .iter()
            .map(|&t| geo.eval(t).unwrap().to_sym())
            .collect();
        let steering: Vec<GeneralMatrix<f64>> =
            times.iter().map(|&t| geo.steering(t).unwrap()).collect();
        let report = verify_sampled(&times, &samples, Some(&steering), 1e-6).unwrap();
        assert!(
            report.pass,
            "sampled geodesic failed finite-difference check: {report:?}"
        );
        assert!(report.cost_constancy.is_none());

        // Steering inconsistent with the samples must fail even under the
        // truncation floor.
        let wrong: Vec<GeneralMatrix<f64>> = steering
            .iter()
            .map(|a| GeneralMatrix::from_raw(a.matrix() * 2.0))
            .collect();
        let report = verify_sampled(&times, &samples, Some(&wrong), 1e-6).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn too_few_steps_are_rejected() {
        let p0 = SpdMatrix::<f64>::identity(2);
        assert!(matches!(
            integrate_flow(&p0, |_| Ok(GeneralMatrix::zeros(2)), 5).unwrap_err(),
            Error::InvalidArgument { .. }
        ));
    }
}
