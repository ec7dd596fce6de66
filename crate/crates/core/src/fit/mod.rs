//! Least-squares fitting of parametric path families to covariance data.
//!
//! A [`CovSequence`] holds sample covariances at increasing knot times,
//! normalized to `[0, 1]` and passed through [`psd_repair`]. [`fit`]
//! minimizes the summed squared Frobenius mismatch between the family's
//! path and the snapshots over the family parameters: the start point `P0`
//! through a triangular factor with softplus-positive diagonal, and the
//! factor parameter (`Q`, `A`, or `A0`) entrywise. The optimizer is BFGS
//! with central-difference gradients and seeded Gaussian multistarts;
//! [`fit_eps_search`] sweeps the skew penalty of the split-norm family over
//! a grid, warm-starting each grid point from the previous one.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::iter::{IntoParallelIterator, ParallelIterator};
use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{check_same_dim, symmetric_eigen_sorted, GeneralMatrix, SpdMatrix, SymMatrix};
use crate::model::{Family, PathModel};
use crate::path::CovariancePath;
use crate::scalar::{cast, to_f64, Scalar};

mod bfgs;

/// Relative eigenvalue floor applied when repairing sample covariances.
pub const PSD_REPAIR_FLOOR_REL: f64 = 1e-8;
/// Default number of optimizer starts.
pub const DEFAULT_MULTISTARTS: usize = 8;
/// Start perturbations are scaled by this fraction of the whitened-endpoint
/// log distance of the data.
const START_PERTURBATION_REL: f64 = 0.1;

/// Clips the eigenvalues of a symmetric matrix at
/// [`PSD_REPAIR_FLOOR_REL`]` * lambda_max` and re-symmetrizes.
///
/// Matrices already above the floor are returned unchanged, so repair does
/// not perturb clean inputs. A matrix with no positive eigenvalue carries no
/// usable scale and is rejected.
pub fn psd_repair<T: Scalar>(m: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let (eigenvalues, vectors) = symmetric_eigen_sorted(m.matrix().clone());
    let n = eigenvalues.len();
    let lambda_max = eigenvalues[n - 1];
    if lambda_max <= T::zero() {
        return Err(Error::NotPositiveDefinite {
            lambda_min: to_f64(eigenvalues[0]),
            lambda_max: to_f64(lambda_max),
        });
    }
    let floor = cast::<T>(PSD_REPAIR_FLOOR_REL) * lambda_max;
    if eigenvalues[0] >= floor {
        return Ok(m.clone());
    }
    let clipped = DVector::from_fn(n, |i, _| eigenvalues[i].max(floor));
    let rebuilt = &vectors * DMatrix::from_diagonal(&clipped) * vectors.transpose();
    Ok(SymMatrix::symmetrize(&rebuilt))
}

/// Sample covariances at strictly increasing knot times.
///
/// Construction normalizes the times affinely onto `[0, 1]` and repairs
/// every matrix, so downstream code can rely on well-conditioned SPD
/// snapshots on the unit interval.
#[derive(Debug, Clone)]
pub struct CovSequence<T: Scalar> {
    times: Vec<T>,
    matrices: Vec<SymMatrix<T>>,
}

impl<T: Scalar> CovSequence<T> {
    /// Validates, normalizes, and repairs raw snapshots.
    ///
    /// `times` must be finite and strictly increasing, one per matrix; a
    /// single-snapshot sequence is assigned the time zero.
    pub fn new(times: Vec<T>, matrices: Vec<SymMatrix<T>>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidArgument {
                reason: "covariance sequence needs at least one snapshot".into(),
            });
        }
        if times.len() != matrices.len() {
            return Err(Error::InvalidArgument {
                reason: format!("{} knot times for {} matrices", times.len(), matrices.len()),
            });
        }
        let dim = matrices[0].dim();
        for m in &matrices[1..] {
            check_same_dim(dim, m.dim())?;
        }
        if times.iter().any(|&t| !to_f64(t).is_finite()) {
            return Err(Error::InvalidArgument {
                reason: "knot times must be finite".into(),
            });
        }
        if times.windows(2).any(|pair| pair[1] <= pair[0]) {
            return Err(Error::InvalidArgument {
                reason: "knot times must be strictly increasing".into(),
            });
        }
        let times = if times.len() == 1 {
            vec![T::zero()]
        } else {
            let start = times[0];
            let span = times[times.len() - 1] - start;
            times.iter().map(|&t| (t - start) / span).collect()
        };
        let matrices = matrices.iter().map(psd_repair).collect::<Result<_>>()?;
        Ok(Self { times, matrices })
    }

    /// Knot times, normalized to `[0, 1]`.
    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Repaired sample covariances, one per knot.
    pub fn matrices(&self) -> &[SymMatrix<T>] {
        &self.matrices
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Number of snapshots (knot count plus one).
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    /// Always false: construction requires at least one snapshot.
    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Squared Frobenius mass of the data, the normalizer for fit errors.
    pub fn total_norm_squared(&self) -> T {
        self.matrices
            .iter()
            .fold(T::zero(), |acc, m| acc + m.matrix().norm_squared())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
struct CovSequenceDto<T: Scalar> {
    times: Vec<T>,
    matrices: Vec<SymMatrix<T>>,
}

impl<T: Scalar + Serialize> Serialize for CovSequence<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CovSequenceDto {
            times: self.times.clone(),
            matrices: self.matrices.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Scalar + DeserializeOwned> Deserialize<'de> for CovSequence<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = CovSequenceDto::<T>::deserialize(deserializer)?;
        CovSequence::new(dto.times, dto.matrices).map_err(D::Error::custom)
    }
}

/// Knobs for the multistart quasi-Newton fit.
#[derive(Debug, Clone)]
pub struct FitOptions<T: Scalar> {
    /// Optimizer starts; the first is the unperturbed initial guess.
    pub multistarts: usize,
    /// Seed for the start perturbations.
    pub seed: u64,
    /// Iteration budget per start.
    pub max_iters: usize,
    /// Relative gradient tolerance declaring convergence.
    pub grad_tol: T,
    /// Skew penalty for the wls family; the geodesic families ignore it.
    pub eps: Option<T>,
    /// Worker threads fanning out over starts (1 runs sequentially).
    pub jobs: usize,
}

impl<T: Scalar> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            multistarts: DEFAULT_MULTISTARTS,
            seed: 0,
            max_iters: 200,
            grad_tol: cast(1e-8),
            eps: None,
            jobs: 1,
        }
    }
}

/// One row of the skew-penalty search table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct EpsTableRow<T: Scalar> {
    /// Skew penalty of this grid point.
    pub eps: T,
    /// Best objective reached at this penalty.
    pub objective: T,
    /// Objective divided by the data's squared Frobenius mass.
    pub normalized_error: T,
}

/// Outcome of a family fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: DeserializeOwned"))]
pub struct FitResult<T: Scalar> {
    /// Fitted family.
    pub family: Family,
    /// Fitted path model.
    pub model: PathModel<T>,
    /// Summed squared Frobenius mismatch at the knots.
    pub objective: T,
    /// Objective divided by the data's squared Frobenius mass.
    pub normalized_error: T,
    /// Accepted optimizer iterations of the winning start.
    pub iterations: usize,
    /// Whether the winning start met the gradient tolerance.
    pub converged: bool,
    /// Index of the winning start (0 is unperturbed; indices past the
    /// multistart count are warm starts).
    pub multistart_index: usize,
    /// Skew penalty, for wls fits.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps: Option<T>,
    /// Per-penalty search table, when a grid search produced this fit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eps_table: Option<Vec<EpsTableRow<T>>>,
    /// Knot times the fit was evaluated on.
    pub times: Vec<T>,
    /// Fitted path sampled at the knot times.
    pub matrices: Vec<SymMatrix<T>>,
}

/// Unperturbed starting parameters: the repaired first snapshot for `P0`
/// and a zero factor parameter.
pub fn initial_guess<T: Scalar>(seq: &CovSequence<T>) -> Result<(SpdMatrix<T>, GeneralMatrix<T>)> {
    let p0 = SpdMatrix::from_sym(seq.matrices()[0].clone())?;
    Ok((p0, GeneralMatrix::zeros(seq.dim())))
}

fn start_scale<T: Scalar>(seq: &CovSequence<T>) -> Result<T> {
    let first = &seq.matrices()[0];
    let last = &seq.matrices()[seq.len() - 1];
    if first.matrix() == last.matrix() {
        return Ok(T::zero());
    }
    let p_first = SpdMatrix::from_sym(first.clone())?;
    let p_last = SpdMatrix::from_sym(last.clone())?;
    let isqrt = p_first.inv_sqrt();
    let whitened = SpdMatrix::new(isqrt.matrix() * p_last.matrix() * isqrt.matrix())?;
    Ok(cast::<T>(START_PERTURBATION_REL) * whitened.log().matrix().norm())
}

fn theta_len(n: usize) -> usize {
    n * (n + 1) / 2 + n * n
}

fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn softplus_inv<T: Scalar>(y: T) -> T {
    y + (-(-y).exp()).ln_1p()
}

fn pack<T: Scalar>(chol_lower: &DMatrix<T>, param: &DMatrix<T>) -> DVector<T> {
    let n = chol_lower.nrows();
    let mut theta = DVector::zeros(theta_len(n));
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            theta[idx] = if i == j {
                softplus_inv(chol_lower[(i, i)])
            } else {
                chol_lower[(i, j)]
            };
            idx += 1;
        }
    }
    for i in 0..n {
        for j in 0..n {
            theta[idx] = param[(i, j)];
            idx += 1;
        }
    }
    theta
}

fn unpack<T: Scalar>(theta: &DVector<T>, n: usize) -> Option<(SpdMatrix<T>, GeneralMatrix<T>)> {
    let mut lower = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            lower[(i, j)] = if i == j {
                softplus(theta[idx])
            } else {
                theta[idx]
            };
            idx += 1;
        }
    }
    let p0 = SpdMatrix::from_sym(SymMatrix::symmetrize(&(&lower * lower.transpose()))).ok()?;
    let mut param = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            param[(i, j)] = theta[idx];
            idx += 1;
        }
    }
    Some((p0, GeneralMatrix::new(param).ok()?))
}

fn objective_value<T: Scalar>(
    seq: &CovSequence<T>,
    family: Family,
    eps: Option<T>,
    theta: &DVector<T>,
) -> Option<T> {
    let (p0, param) = unpack(theta, seq.dim())?;
    let model = PathModel::from_parts(family, p0, param, eps).ok()?;
    let samples = model.sample_raw(seq.times()).ok()?;
    let mut total = T::zero();
    for (sample, data) in samples.iter().zip(seq.matrices()) {
        total += (sample - data.matrix()).norm_squared();
    }
    to_f64(total).is_finite().then_some(total)
}

struct StartRun<T: Scalar> {
    index: usize,
    theta: DVector<T>,
    objective: T,
    iterations: usize,
    converged: bool,
}

fn finite_or_inf<T: Scalar>(x: T) -> f64 {
    let v = to_f64(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn check_options<T: Scalar>(options: &FitOptions<T>) -> Result<()> {
    if options.multistarts == 0 {
        return Err(Error::InvalidArgument {
            reason: "fitting needs at least one start".into(),
        });
    }
    if options.jobs == 0 {
        return Err(Error::InvalidArgument {
            reason: "jobs must be at least 1".into(),
        });
    }
    Ok(())
}

fn validated_eps<T: Scalar>(family: Family, options: &FitOptions<T>) -> Result<Option<T>> {
    if family != Family::Wls {
        return Ok(None);
    }
    match options.eps {
        Some(eps) if eps > T::zero() => Ok(Some(eps)),
        Some(eps) => Err(Error::InvalidArgument {
            reason: format!("wls fits need eps > 0, got {}", to_f64(eps)),
        }),
        None => Err(Error::InvalidArgument {
            reason: "wls fits need options.eps; use fit_eps_search to search over it".into(),
        }),
    }
}

fn run_starts<T: Scalar>(
    seq: &CovSequence<T>,
    family: Family,
    eps: Option<T>,
    options: &FitOptions<T>,
    extra_starts: &[DVector<T>],
) -> Result<StartRun<T>> {
    let (p0, param) = initial_guess(seq)?;
    let chol = p0
        .matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateParameter {
            reason: "repaired start covariance has no triangular factor".into(),
        })?;
    let base = pack(&chol.l(), param.matrix());
    let scale = start_scale(seq)?;

    let mut starts = Vec::with_capacity(options.multistarts + extra_starts.len());
    starts.push(base.clone());
    for s in 1..options.multistarts {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(s as u64);
        let noise = DVector::from_fn(base.len(), |_, _| {
            cast::<T>(rng.sample::<f64, _>(StandardNormal))
        });
        starts.push(&base + noise * scale);
    }
    starts.extend(extra_starts.iter().cloned());

    let objective = |theta: &DVector<T>| objective_value(seq, family, eps, theta);
    let run_one = |(index, theta): (usize, DVector<T>)| -> Option<StartRun<T>> {
        let out = bfgs::minimize(&objective, &theta, options.max_iters, options.grad_tol)?;
        Some(StartRun {
            index,
            theta: out.theta,
            objective: out.objective,
            iterations: out.iterations,
            converged: out.converged,
        })
    };

    let indexed: Vec<(usize, DVector<T>)> = starts.into_iter().enumerate().collect();
    let runs: Vec<StartRun<T>> = if options.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument {
                reason: format!("could not start the worker pool: {e}"),
            })?;
        pool.install(|| indexed.into_par_iter().filter_map(run_one).collect())
    } else {
        indexed.into_iter().filter_map(run_one).collect()
    };

    runs.into_iter()
        .min_by(|a, b| {
            finite_or_inf(a.objective)
                .partial_cmp(&finite_or_inf(b.objective))
                .unwrap_or(Ordering::Equal)
                .then(a.index.cmp(&b.index))
        })
        .ok_or_else(|| Error::DegenerateParameter {
            reason: "every optimizer start was infeasible".into(),
        })
}

fn assemble<T: Scalar>(
    seq: &CovSequence<T>,
    family: Family,
    eps: Option<T>,
    run: StartRun<T>,
    eps_table: Option<Vec<EpsTableRow<T>>>,
) -> Result<FitResult<T>> {
    let (p0, param) = unpack(&run.theta, seq.dim()).ok_or_else(|| Error::DegenerateParameter {
        reason: "optimizer returned unusable parameters".into(),
    })?;
    let model = PathModel::from_parts(family, p0, param, eps)?;
    let raw = model.sample_raw(seq.times())?;
    Ok(FitResult {
        family,
        model,
        objective: run.objective,
        normalized_error: run.objective / seq.total_norm_squared(),
        iterations: run.iterations,
        converged: run.converged,
        multistart_index: run.index,
        eps,
        eps_table,
        times: seq.times().to_vec(),
        matrices: raw.iter().map(SymMatrix::symmetrize).collect(),
    })
}

/// Fits one family to the sequence by multistart least squares.
///
/// Every start descends monotonically; the best start by (objective, start
/// index) wins. A fit that exhausts its iteration budget everywhere is still
/// returned, with `converged` unset. A single-snapshot sequence yields the
/// constant fit at the repaired snapshot.
pub fn fit<T: Scalar>(
    seq: &CovSequence<T>,
    family: Family,
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    check_options(options)?;
    let eps = validated_eps(family, options)?;
    let run = run_starts(seq, family, eps, options, &[])?;
    assemble(seq, family, eps, run, None)
}

/// Fits the wls family at every skew penalty in `eps_grid` and returns the
/// best fit together with the full per-penalty table.
///
/// Each grid point runs the usual cold multistarts plus one warm start from
/// the previous grid point's winner, so a grid point can never end up worse
/// than its cold-start fit.
pub fn fit_eps_search<T: Scalar>(
    seq: &CovSequence<T>,
    eps_grid: &[T],
    options: &FitOptions<T>,
) -> Result<(FitResult<T>, Vec<EpsTableRow<T>>)> {
    check_options(options)?;
    if eps_grid.is_empty() {
        return Err(Error::InvalidArgument {
            reason: "eps grid must be nonempty".into(),
        });
    }
    if let Some(&bad) = eps_grid.iter().find(|&&eps| eps <= T::zero()) {
        return Err(Error::InvalidArgument {
            reason: format!("eps grid must be positive, got {}", to_f64(bad)),
        });
    }

    let denominator = seq.total_norm_squared();
    let mut table = Vec::with_capacity(eps_grid.len());
    let mut warm: Option<DVector<T>> = None;
    let mut best: Option<(StartRun<T>, T)> = None;
    for &eps in eps_grid {
        let extra: Vec<DVector<T>> = warm.iter().cloned().collect();
        let run = run_starts(seq, Family::Wls, Some(eps), options, &extra)?;
        table.push(EpsTableRow {
            eps,
            objective: run.objective,
            normalized_error: run.objective / denominator,
        });
        warm = Some(run.theta.clone());
        let improves = best.as_ref().is_none_or(|(incumbent, _)| {
            finite_or_inf(run.objective) < finite_or_inf(incumbent.objective)
        });
        if improves {
            best = Some((run, eps));
        }
    }
    let (run, eps) = best.expect("the grid is nonempty");
    let result = assemble(seq, Family::Wls, Some(eps), run, Some(table.clone()))?;
    Ok((result, table))
}
