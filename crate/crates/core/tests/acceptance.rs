//! Acceptance suite exercising the crate end to end: closed-form geodesics,
//! distances, the steered-path solvers and their branch structure, cost
//! invariants, independent flow and quadrature oracles, fitting, and the CSV
//! pipeline. Every test prints one `criterion NN PASS/FAIL` line with its
//! measured figures (visible under `--nocapture`, or on failure).

use std::f64::consts::{LN_2, PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use covpath::fit::{fit, FitOptions};
use covpath::geodesics::{GeodesicInfo, GeodesicOmt};
use covpath::matrix::{GeneralMatrix, SpdMatrix, SymMatrix};
use covpath::metrics::{bw_distance, fr_distance};
use covpath::model::Family;
use covpath::oracle::{
    integrate_flow, perturbed_feasible_path, quadrature_cost, verify_parametric, SampledPath,
};
use covpath::path::{
    fisher_rao_cost, fisher_rao_transport_cost, path_cost, split_norm_cost, CovariancePath,
    RunningCost,
};
use covpath::synth::{synth_generate, SYNTH_WLS_EPS};
use covpath::timeseries::{load_timeseries, windowed_covariances};
use covpath::wls::{
    eps_to_alpha, existence_bound, geometric_grid, pi_seed, solve_continuation, solve_eps_sweep,
    solve_local, wls_cost_upper_bound, LocalError, WlsModel, WlsSolution,
    DEFAULT_CONTINUATION_STEPS,
};

/// Endpoints used by every reference check: `diag(1, 2)` to `diag(2, 1)`.
fn reference_pair() -> (SpdMatrix<f64>, SpdMatrix<f64>) {
    (
        SpdMatrix::from_diagonal(&[1.0, 2.0]).unwrap(),
        SpdMatrix::from_diagonal(&[2.0, 1.0]).unwrap(),
    )
}

fn uniform_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 / (count - 1) as f64).collect()
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SpdMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let shift: f64 = rng.random_range(0.3..1.0);
    SpdMatrix::new(&g * g.transpose() + DMatrix::identity(n, n) * shift).unwrap()
}

fn random_general(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> GeneralMatrix<f64> {
    GeneralMatrix::new(DMatrix::from_fn(n, n, |_, _| {
        scale * rng.sample::<f64, _>(StandardNormal)
    }))
    .unwrap()
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = scale * rng.sample::<f64, _>(StandardNormal);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::new(m).unwrap()
}

fn entry_gap(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    (got - want).amax()
}

/// Prints the single pass/fail line for a criterion, then asserts it.
fn check(tag: &str, ok: bool, detail: &str) {
    println!("{tag} {}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{tag}: {detail}");
}

#[test]
fn criterion_01_reference_geodesics_match_closed_forms() {
    let (p0, p1) = reference_pair();
    let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
    let info = GeodesicInfo::connecting(&p0, &p1).unwrap();

    let mut worst_omt = 0.0_f64;
    let mut worst_info = 0.0_f64;
    for &t in &uniform_grid(33) {
        let omt_want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            (1.0 + (SQRT_2 - 1.0) * t).powi(2),
            (SQRT_2 + (1.0 - SQRT_2) * t).powi(2),
        ]));
        let info_want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0_f64.powf(t),
            2.0_f64.powf(1.0 - t),
        ]));
        worst_omt = worst_omt.max(entry_gap(&omt.eval_raw(t).unwrap(), &omt_want));
        worst_info = worst_info.max(entry_gap(&info.eval_raw(t).unwrap(), &info_want));
    }

    let ok = worst_omt <= 1e-10 && worst_info <= 1e-10;
    check(
        "criterion 01",
        ok,
        &format!(
            "closed-form geodesics over 33 points: worst entry gap omt {worst_omt:.2e}, info {worst_info:.2e} (tol 1e-10)"
        ),
    );
}

#[test]
fn criterion_02_distances_match_quadrature_costs() {
    let (p0, p1) = reference_pair();
    let bw = bw_distance(&p0, &p1).unwrap();
    let fr = fr_distance(&p0, &p1).unwrap();
    let bw_gap = (bw - SQRT_2 * (SQRT_2 - 1.0)).abs();
    let fr_gap = (fr - SQRT_2 * LN_2).abs();

    let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
    let info = GeodesicInfo::connecting(&p0, &p1).unwrap();
    let gl_bw_gap = (path_cost(&omt, &RunningCost::Transport, 64).unwrap().sqrt() - bw).abs();
    let gl_fr_gap = (path_cost(&info, &RunningCost::FisherRao, 64)
        .unwrap()
        .sqrt()
        - fr)
        .abs();

    let simpson = |path: &dyn CovariancePath<f64>, cost: &RunningCost<f64>| {
        let times = uniform_grid(401);
        let mats = times.iter().map(|&t| path.eval(t).unwrap()).collect();
        let steer = times
            .iter()
            .map(|&t| path.steering(t).unwrap())
            .collect::<Vec<_>>();
        let sampled = SampledPath::new(times, mats).unwrap();
        quadrature_cost(&sampled, &steer, cost).unwrap().sqrt()
    };
    let simpson_bw_gap = (simpson(&omt, &RunningCost::Transport) - bw).abs();
    let simpson_fr_gap = (simpson(&info, &RunningCost::FisherRao) - fr).abs();

    let ok = bw_gap <= 1e-10
        && fr_gap <= 1e-10
        && gl_bw_gap <= 1e-7
        && gl_fr_gap <= 1e-7
        && simpson_bw_gap <= 1e-7
        && simpson_fr_gap <= 1e-7;
    check(
        "criterion 02",
        ok,
        &format!(
            "distance gaps bw {bw_gap:.2e}, fr {fr_gap:.2e} (tol 1e-10); sqrt path-cost gaps \
             gauss {gl_bw_gap:.2e}/{gl_fr_gap:.2e}, simpson {simpson_bw_gap:.2e}/{simpson_fr_gap:.2e} (tol 1e-7)"
        ),
    );
}

#[test]
fn criterion_03_zero_penalty_rotation_path() {
    let (p0, p1) = reference_pair();
    let a0 = GeneralMatrix::new(DMatrix::from_row_slice(
        2,
        2,
        &[0.0, PI / 2.0, -PI / 2.0, 0.0],
    ))
    .unwrap();
    let model = WlsModel::new(p0, a0, 0.0).unwrap();

    let mut worst = 0.0_f64;
    for &t in &uniform_grid(33) {
        let s = (PI * t / 2.0).sin();
        let c = (PI * t / 2.0).cos();
        let want = DMatrix::from_row_slice(2, 2, &[1.0 + s * s, c * s, c * s, 1.0 + c * c]);
        worst = worst.max(entry_gap(&model.eval_raw(t).unwrap(), &want));
    }
    let endpoint_gap = entry_gap(&model.eval_raw(1.0).unwrap(), p1.matrix());
    let cost = model.cost();

    let ok = worst <= 1e-10 && endpoint_gap <= 1e-10 && cost.abs() <= 1e-15;
    check(
        "criterion 03",
        ok,
        &format!(
            "rotation path worst entry gap {worst:.2e}, endpoint gap {endpoint_gap:.2e} (tol 1e-10), cost {cost:.2e} (tol 1e-15)"
        ),
    );
}

#[test]
fn criterion_04_zero_alpha_solver_returns_information_geodesic() {
    let (p0, p1) = reference_pair();
    let sol = solve_continuation(&p0, &p1, 0.0, DEFAULT_CONTINUATION_STEPS).unwrap();
    let seed = pi_seed(&p0, &p1).unwrap();
    let costate_gap = (sol.pi.matrix() - seed.matrix()).norm();

    let model = sol.model().unwrap();
    let info = GeodesicInfo::connecting(&p0, &p1).unwrap();
    let mut worst = 0.0_f64;
    for &t in &uniform_grid(33) {
        worst = worst.max(entry_gap(
            &model.eval_raw(t).unwrap(),
            &info.eval_raw(t).unwrap(),
        ));
    }

    let ok = costate_gap <= 1e-9 && worst <= 1e-10;
    check(
        "criterion 04",
        ok,
        &format!(
            "costate gap to seed {costate_gap:.2e} (tol 1e-9), worst entry gap to information geodesic {worst:.2e} (tol 1e-10)"
        ),
    );
}

#[test]
fn criterion_05_uniqueness_inside_the_existence_bound() {
    let (p0, p1) = reference_pair();
    let bound = existence_bound(&p0, &p1).unwrap();
    let bound_gap = (bound - 0.5).abs();

    let alpha = 0.45;
    let star = solve_continuation(&p0, &p1, alpha, DEFAULT_CONTINUATION_STEPS).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let scale = 0.3 * (1.0 + star.pi.matrix().norm());
    let mut worst_pi_gap = 0.0_f64;
    for k in 0..20 {
        let init =
            SymMatrix::new(star.pi.matrix() + random_sym(&mut rng, 2, scale).matrix()).unwrap();
        let sol = match solve_local(&p0, &p1, alpha, &init) {
            Ok(sol) => sol,
            Err(LocalError::Stagnation { best, .. }) if best.residual <= 1e-8 => *best,
            Err(err) => panic!("randomized init {k} failed: {err:?}"),
        };
        worst_pi_gap = worst_pi_gap.max((sol.pi.matrix() - star.pi.matrix()).norm());
    }

    let ok = bound_gap <= 1e-10 && star.residual <= 1e-8 && worst_pi_gap <= 1e-6;
    check(
        "criterion 05",
        ok,
        &format!(
            "existence bound gap {bound_gap:.2e} (tol 1e-10), continuation residual {:.2e} (tol 1e-8), \
             worst costate gap over 20 randomized starts {worst_pi_gap:.2e} (tol 1e-6)",
            star.residual
        ),
    );
}

fn branch_seed(sign: f64) -> SymMatrix<f64> {
    let v = sign * PI * 1e-3;
    SymMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0])).unwrap()
}

fn branch_sweep_grid() -> Vec<f64> {
    let mut grid = geometric_grid(0.001, 0.05, 18).unwrap();
    grid.extend(geometric_grid(0.05, 0.2, 16).unwrap().into_iter().skip(1));
    grid
}

fn skew_off_diagonal(sol: &WlsSolution<f64>) -> f64 {
    sol.a0.skew_part().matrix()[(0, 1)]
}

#[test]
fn criterion_06_two_branches_merge_as_the_penalty_grows() {
    let (p0, p1) = reference_pair();
    let grid = branch_sweep_grid();
    let plus = solve_eps_sweep(&p0, &p1, &grid, &branch_seed(1.0)).unwrap();
    let minus = solve_eps_sweep(&p0, &p1, &grid, &branch_seed(-1.0)).unwrap();

    let at = grid.iter().position(|&e| e == 0.05).unwrap();
    let residual_plus = plus[at].residual;
    let residual_minus = minus[at].residual;
    let gap_at_005 = (skew_off_diagonal(&plus[at]) - skew_off_diagonal(&minus[at])).abs();

    let mut min_gap = f64::INFINITY;
    let mut min_gap_eps = f64::NAN;
    for (k, &eps) in grid.iter().enumerate() {
        if (0.10..=0.16).contains(&eps) {
            let gap = (skew_off_diagonal(&plus[k]) - skew_off_diagonal(&minus[k])).abs();
            if gap < min_gap {
                min_gap = gap;
                min_gap_eps = eps;
            }
        }
    }

    let ok = residual_plus <= 1e-7 && residual_minus <= 1e-7 && gap_at_005 > 0.1 && min_gap < 1e-3;
    check(
        "criterion 06",
        ok,
        &format!(
            "at eps=0.05 residuals {residual_plus:.2e}/{residual_minus:.2e} (tol 1e-7) with skew gap {gap_at_005:.3} (> 0.1); \
             branches merge to gap {min_gap:.2e} at eps={min_gap_eps:.3} (< 1e-3 within [0.10, 0.16])"
        ),
    );
}

#[test]
fn criterion_07_solved_paths_keep_constant_cost_under_the_bound() {
    let (p0, p1) = reference_pair();
    let bound = wls_cost_upper_bound(&p0, &p1).unwrap();

    let small_grid = geometric_grid(0.001, 0.05, 18).unwrap();
    let mut solutions = vec![
        (
            "alpha=0",
            solve_continuation(&p0, &p1, 0.0, DEFAULT_CONTINUATION_STEPS).unwrap(),
        ),
        (
            "alpha=0.45",
            solve_continuation(&p0, &p1, 0.45, DEFAULT_CONTINUATION_STEPS).unwrap(),
        ),
        (
            "eps=20",
            solve_continuation(
                &p0,
                &p1,
                eps_to_alpha(20.0).unwrap(),
                DEFAULT_CONTINUATION_STEPS,
            )
            .unwrap(),
        ),
    ];
    for sign in [1.0, -1.0] {
        let sweep = solve_eps_sweep(&p0, &p1, &small_grid, &branch_seed(sign)).unwrap();
        let label = if sign > 0.0 {
            "eps=0.05 branch +"
        } else {
            "eps=0.05 branch -"
        };
        solutions.push((label, sweep.into_iter().last().unwrap()));
    }

    let mut worst_drift = 0.0_f64;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut detail = String::new();
    for (label, sol) in &solutions {
        let model = sol.model().unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &t in &uniform_grid(33) {
            let rate = split_norm_cost(sol.eps, &model.steering(t).unwrap());
            lo = lo.min(rate);
            hi = hi.max(rate);
        }
        worst_drift = worst_drift.max(hi - lo);
        worst_excess = worst_excess.max(sol.cost - bound);
        detail.push_str(&format!(" [{label}: cost {:.4}]", sol.cost));
    }

    let ok = worst_drift < 1e-9 && worst_excess <= 1e-8;
    check(
        "criterion 07",
        ok,
        &format!(
            "over {} solved paths: worst cost drift {worst_drift:.2e} (tol 1e-9), worst excess over bound {bound:.4} is {worst_excess:.2e} (tol 1e-8);{detail}",
            solutions.len()
        ),
    );
}

#[test]
fn criterion_08_transport_form_dominates_the_information_cost() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut min_margin = f64::INFINITY;
    for k in 0..10_000 {
        let n = 2 + k % 4;
        let p = random_spd(&mut rng, n);
        let a = random_general(&mut rng, n, 1.0);
        let margin = fisher_rao_transport_cost(&p, &a).unwrap() - fisher_rao_cost(&p, &a).unwrap();
        min_margin = min_margin.min(margin);
    }

    let ok = min_margin >= -1e-12;
    check(
        "criterion 08",
        ok,
        &format!(
            "min(transport-form minus information cost) over 10000 random (P, A) is {min_margin:.2e} (tol -1e-12)"
        ),
    );
}

#[test]
fn criterion_09_perturbed_paths_never_undercut_the_geodesics() {
    let (p0, p1) = reference_pair();
    let bw2 = (SQRT_2 * (SQRT_2 - 1.0)).powi(2);
    let fr2 = (SQRT_2 * LN_2).powi(2);

    let mut min_transport_margin = f64::INFINITY;
    let mut min_fisher_margin = f64::INFINITY;
    for seed in 0..100 {
        let (path, steering) = perturbed_feasible_path(&p0, &p1, seed).unwrap();
        let transport = quadrature_cost(&path, &steering, &RunningCost::Transport).unwrap();
        let fisher = quadrature_cost(&path, &steering, &RunningCost::FisherRao).unwrap();
        min_transport_margin = min_transport_margin.min(transport - bw2);
        min_fisher_margin = min_fisher_margin.min(fisher - fr2);
    }

    let ok = min_transport_margin >= -1e-9 && min_fisher_margin >= -1e-9;
    check(
        "criterion 09",
        ok,
        &format!(
            "over 100 seeded perturbed paths: min transport margin {min_transport_margin:.2e}, \
             min information margin {min_fisher_margin:.2e} (tol -1e-9)"
        ),
    );
}

#[test]
fn criterion_10_integrated_flows_reproduce_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0_f64;
    for n in [2, 3, 5] {
        let p0 = random_spd(&mut rng, n);
        let p1 = random_spd(&mut rng, n);
        let omt = GeodesicOmt::connecting(&p0, &p1).unwrap();
        let info = GeodesicInfo::connecting(&p0, &p1).unwrap();
        let wls = WlsModel::new(p0.clone(), random_general(&mut rng, n, 0.7), 20.0).unwrap();

        let paths: [&dyn CovariancePath<f64>; 3] = [&omt, &info, &wls];
        for path in paths {
            let flow = integrate_flow(&p0, |t| path.steering(t), 1000).unwrap();
            let got = flow.matrices().last().unwrap();
            let want = path.eval(1.0).unwrap();
            let gap = (got.matrix() - want.matrix()).norm() / (1.0 + want.matrix().norm());
            worst = worst.max(gap);
        }
    }

    let ok = worst <= 1e-7;
    check(
        "criterion 10",
        ok,
        &format!(
            "worst relative endpoint gap between integrated flow and closed form over n in {{2, 3, 5}} and three families: {worst:.2e} (tol 1e-7)"
        ),
    );
}

#[test]
fn criterion_11_fits_recover_generators_and_beat_the_wrong_family() {
    let mut worst_clean = 0.0_f64;
    for family in Family::ALL {
        let (seq, _) = synth_generate::<f64>(family, 3, 9, 0.0, 11).unwrap();
        let options = FitOptions {
            eps: (family == Family::Wls).then_some(SYNTH_WLS_EPS),
            ..FitOptions::default()
        };
        let result = fit(&seq, family, &options).unwrap();
        worst_clean = worst_clean.max(result.normalized_error);
    }

    let light = |eps: Option<f64>| FitOptions {
        multistarts: 3,
        max_iters: 120,
        eps,
        ..FitOptions::default()
    };
    let mut wins = 0;
    for seed in 0..20 {
        let (seq, _) = synth_generate::<f64>(Family::Wls, 3, 9, 0.05, 1000 + seed).unwrap();
        let wls = fit(&seq, Family::Wls, &light(Some(SYNTH_WLS_EPS))).unwrap();
        let info = fit(&seq, Family::Info, &light(None)).unwrap();
        if wls.normalized_error < info.normalized_error {
            wins += 1;
        }
    }

    let ok = worst_clean <= 1e-8 && wins >= 15;
    check(
        "criterion 11",
        ok,
        &format!(
            "worst normalized error on clean data over three families {worst_clean:.2e} (tol 1e-8); \
             split-norm fit beats information fit on {wins}/20 noisy seeds (need >= 15)"
        ),
    );
}

#[test]
fn criterion_12_csv_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("series.csv");
    let mut content = String::from("c1,c2,c3,c4,c5,c6,c7\n");
    let mut state = 12_u64;
    let mut next = || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    for _ in 0..1200 {
        let row: Vec<String> = (0..7).map(|_| format!("{:.6}", next())).collect();
        content.push_str(&row.join(","));
        content.push('\n');
    }
    std::fs::write(&csv_path, content).unwrap();

    let series = load_timeseries::<f64>(&csv_path)
        .unwrap()
        .normalize(true)
        .unwrap();
    let seq = windowed_covariances(&series, 10).unwrap();

    let mut detail = String::new();
    let mut all_pass = true;
    for (family, eps) in [
        (Family::Omt, None),
        (Family::Info, None),
        (Family::Wls, Some(20.0)),
    ] {
        let options = FitOptions {
            multistarts: 2,
            max_iters: 60,
            eps,
            ..FitOptions::default()
        };
        let result = fit(&seq, family, &options).unwrap();
        let report = verify_parametric(
            &result.model,
            &result.model.natural_cost(),
            &result.times,
            &result.matrices,
            1e-6,
        )
        .unwrap();
        all_pass = all_pass && report.pass;
        detail.push_str(&format!(
            " [{family}: error {:.4}, verify {}]",
            result.normalized_error,
            if report.pass { "pass" } else { "FAIL" }
        ));
    }

    check(
        "criterion 12",
        all_pass,
        &format!("1200x7 CSV through windows, three fits, and verification;{detail}"),
    );
}
