//! `covpath`: build, solve, fit, and verify covariance paths from the shell.
//!
//! Subcommands mirror the library layers: `geodesic` and `dist` for the
//! closed-form transport and information families, `wls-path` and `bound`
//! for the split-norm boundary-value problem, `cov` for windowed sample
//! covariances from CSV, `fit` and `synth` for model fitting and synthetic
//! data, and `verify` for the independent flow checks. Output files are
//! JSON written atomically; `--plot-data` adds a wide CSV for external
//! plotting.
//!
//! Exit codes: 0 on success (including `--help`), 1 on usage errors (bad
//! flags, unreadable or malformed inputs), 2 on numerical failures and
//! failed verification. Failures print a `{"error", "message"}` JSON body
//! on stderr.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tempfile::NamedTempFile;

use covpath::fit::{fit, fit_eps_search, FitOptions, FitResult, DEFAULT_MULTISTARTS};
use covpath::geodesics::{GeodesicInfo, GeodesicOmt};
use covpath::io::{load_json, save_json, PathFile};
use covpath::metrics::{bw_distance, fr_distance};
use covpath::model::{Family, PathModel};
use covpath::oracle::{verify_parametric, verify_sampled, VerifyReport};
use covpath::synth::synth_generate;
use covpath::timeseries::{load_timeseries, windowed_covariances};
use covpath::wls::{
    eps_to_alpha, existence_bound, geometric_grid, pi_seed, solve_continuation, solve_homotopy,
    solve_local, WlsSolution, DEFAULT_CONTINUATION_STEPS,
};
use covpath::{CovSequence64, Error, Result, SpdMatrix64, SymMatrix64};

/// Default skew-penalty search grid: 16 points spaced geometrically.
const DEFAULT_EPS_GRID: (f64, f64, usize) = (0.1, 100.0, 16);

#[derive(Parser)]
#[command(
    name = "covpath",
    version,
    about = "Covariance paths on the SPD manifold"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a two-endpoint geodesic and write the path file.
    Geodesic(GeodesicArgs),
    /// Print the geodesic distance between two endpoints.
    Dist(DistArgs),
    /// Solve the split-norm boundary-value problem and write the path file.
    WlsPath(WlsPathArgs),
    /// Print the uniqueness radius of the split-norm endpoint problem.
    Bound(EndpointArgs),
    /// Compute windowed sample covariances from a CSV time series.
    Cov(CovArgs),
    /// Fit a path family to a covariance sequence.
    Fit(FitArgs),
    /// Generate a synthetic covariance sequence with known ground truth.
    Synth(SynthArgs),
    /// Check a path file against the flow equations; exits 2 on failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EndpointArgs {
    /// Start covariance (matrix JSON).
    #[arg(long, value_name = "FILE")]
    p0: PathBuf,
    /// End covariance (matrix JSON).
    #[arg(long, value_name = "FILE")]
    p1: PathBuf,
}

impl EndpointArgs {
    fn load(&self) -> Result<(SpdMatrix64, SpdMatrix64)> {
        Ok((load_json(&self.p0)?, load_json(&self.p1)?))
    }
}

#[derive(Args)]
struct GeodesicArgs {
    #[command(flatten)]
    endpoints: EndpointArgs,
    /// Geodesic family: omt or info.
    #[arg(long)]
    family: Family,
    /// Number of uniform sample points on [0, 1].
    #[arg(long, default_value_t = 33)]
    steps: usize,
    /// Output path file (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write a wide CSV (t, P_11, ..., A_11, ...) to this file.
    #[arg(long, value_name = "FILE")]
    plot_data: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Transport (Bures-Wasserstein) distance.
    Bw,
    /// Information (Fisher-Rao) distance.
    Fr,
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    endpoints: EndpointArgs,
    /// Distance to compute.
    #[arg(long, value_enum)]
    metric: Metric,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMethod {
    /// Sweep the coupling from the closed-form seed, then polish.
    Continuation,
    /// Damped Newton iteration from the starting costate.
    Local,
    /// Warm-started sweep over penalty weights from --homotopy-from.
    Homotopy,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("weight").required(true).args(["eps", "alpha"]))]
struct WlsPathArgs {
    #[command(flatten)]
    endpoints: EndpointArgs,
    /// Skew penalty weight (> 0).
    #[arg(long)]
    eps: Option<f64>,
    /// Fixed-point parameter (1+eps)/(2 eps), an alternative to --eps.
    #[arg(long)]
    alpha: Option<f64>,
    /// Boundary-value solver.
    #[arg(long, value_enum, default_value_t = SolveMethod::Continuation)]
    method: SolveMethod,
    /// Runge-Kutta steps for the continuation sweep.
    #[arg(long, default_value_t = DEFAULT_CONTINUATION_STEPS)]
    steps: usize,
    /// Starting costate: "seed", "rand:SEED", or a matrix JSON file.
    #[arg(long, default_value = "seed")]
    init: String,
    /// Starting penalty weight for the homotopy method.
    #[arg(long, value_name = "EPS", default_value_t = 1.0)]
    homotopy_from: f64,
    /// Number of uniform sample points written to the path file.
    #[arg(long, default_value_t = 33)]
    samples: usize,
    /// Output path file (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Also write a wide CSV (t, P_11, ..., A_11, ...) to this file.
    #[arg(long, value_name = "FILE")]
    plot_data: Option<PathBuf>,
}

#[derive(Args)]
struct CovArgs {
    /// Input CSV: one sample per row, one channel per column, optional
    /// header row.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Number of equal-length windows; the remainder is dropped.
    #[arg(long)]
    windows: usize,
    /// Subtract channel means before dividing by standard deviations.
    #[arg(long, conflicts_with = "no_normalize")]
    demean: bool,
    /// Skip the per-channel standard-deviation normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Output covariance sequence (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Covariance sequence (JSON).
    #[arg(long, value_name = "FILE")]
    covseq: PathBuf,
    /// Family to fit: omt, info, or wls.
    #[arg(long)]
    family: Family,
    /// Fixed skew penalty weight for the wls family.
    #[arg(long, conflicts_with = "eps_grid")]
    eps: Option<f64>,
    /// Penalty search grid, spaced geometrically; wls defaults to
    /// 0.1:100:16.
    #[arg(long, value_name = "LO:HI:COUNT")]
    eps_grid: Option<String>,
    /// Number of optimizer starts.
    #[arg(long, default_value_t = DEFAULT_MULTISTARTS)]
    multistart: usize,
    /// Seed for the start perturbations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget per start.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Worker threads fanning out over starts.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output fit result (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Family of the generating model.
    #[arg(long)]
    family: Family,
    /// Matrix dimension.
    #[arg(long)]
    n: usize,
    /// Number of knots; the sequence has knots + 1 snapshots.
    #[arg(long)]
    knots: usize,
    /// Entrywise standard deviation of the added symmetric noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Seed for the model draw and the noise.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output covariance sequence (JSON).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Output ground-truth path file (JSON).
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Path file or fit result (JSON).
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let body = serde_json::json!({
                "error": err.kind(),
                "message": err.to_string(),
            });
            eprintln!("{body}");
            ExitCode::from(if err.is_usage() { 1 } else { 2 })
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Geodesic(args) => run_geodesic(args)?,
        Command::Dist(args) => run_dist(args)?,
        Command::WlsPath(args) => run_wls_path(args)?,
        Command::Bound(args) => {
            let (p0, p1) = args.load()?;
            println!("{}", existence_bound(&p0, &p1)?);
        }
        Command::Cov(args) => run_cov(args)?,
        Command::Fit(args) => run_fit(args)?,
        Command::Synth(args) => run_synth(args)?,
        Command::Verify(args) => return run_verify(args),
    }
    Ok(ExitCode::SUCCESS)
}

fn time_grid(count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument {
            reason: format!("need at least 2 sample points, got {count}"),
        });
    }
    Ok((0..count).map(|i| i as f64 / (count - 1) as f64).collect())
}

fn emit_path(file: &PathFile<f64>, out: &Path, plot_data: Option<&Path>) -> Result<()> {
    save_json(file, out)?;
    if let Some(plot) = plot_data {
        write_plot_csv(file, plot)?;
    }
    Ok(())
}

fn run_geodesic(args: GeodesicArgs) -> Result<()> {
    let (p0, p1) = args.endpoints.load()?;
    let model = match args.family {
        Family::Omt => PathModel::Omt(GeodesicOmt::connecting(&p0, &p1)?),
        Family::Info => PathModel::Info(GeodesicInfo::connecting(&p0, &p1)?),
        Family::Wls => {
            return Err(Error::InvalidArgument {
                reason: "geodesic supports the omt and info families; use wls-path for wls".into(),
            })
        }
    };
    let file = PathFile::from_model(&model, &time_grid(args.steps)?)?;
    emit_path(&file, &args.out, args.plot_data.as_deref())
}

fn run_dist(args: DistArgs) -> Result<()> {
    let (p0, p1) = args.endpoints.load()?;
    let d = match args.metric {
        Metric::Bw => bw_distance(&p0, &p1)?,
        Metric::Fr => fr_distance(&p0, &p1)?,
    };
    println!("{d}");
    Ok(())
}

/// Resolves the `--init` argument of `wls-path` to a starting costate.
///
/// `seed` is the closed-form costate of the zero-coupling limit;
/// `rand:SEED` perturbs it with symmetric Gaussian noise of scale
/// `0.1 (1 + |seed|_F)`; anything else is read as a matrix JSON file.
fn initial_costate(spec: &str, p0: &SpdMatrix64, p1: &SpdMatrix64) -> Result<SymMatrix64> {
    if spec == "seed" {
        return pi_seed(p0, p1);
    }
    if let Some(text) = spec.strip_prefix("rand:") {
        let seed: u64 = text.parse().map_err(|_| Error::InvalidArgument {
            reason: format!("bad init spec {spec:?}: expected rand:SEED with an integer seed"),
        })?;
        let base = pi_seed(p0, p1)?;
        let scale = 0.1 * (1.0 + base.matrix().norm());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mat = base.into_matrix();
        let n = mat.nrows();
        for i in 0..n {
            for j in i..n {
                let draw: f64 = StandardNormal.sample(&mut rng);
                mat[(i, j)] += scale * draw;
                if i != j {
                    mat[(j, i)] = mat[(i, j)];
                }
            }
        }
        return SymMatrix64::new(mat);
    }
    load_json(spec)
}

fn run_wls_path(args: WlsPathArgs) -> Result<()> {
    let (p0, p1) = args.endpoints.load()?;
    let eps = match (args.eps, args.alpha) {
        (Some(eps), _) => eps,
        (None, Some(alpha)) => covpath::wls::alpha_to_eps(alpha)?,
        (None, None) => unreachable!("clap requires one of --eps/--alpha"),
    };
    let alpha = eps_to_alpha(eps)?;
    let init = initial_costate(&args.init, &p0, &p1)?;
    let solution: WlsSolution<f64> = match args.method {
        SolveMethod::Continuation => solve_continuation(&p0, &p1, alpha, args.steps)?,
        SolveMethod::Local => solve_local(&p0, &p1, alpha, &init).map_err(Error::from)?,
        SolveMethod::Homotopy => solve_homotopy(&p0, &p1, eps, args.homotopy_from, &init)?,
    };
    let model = PathModel::Wls(solution.model()?);
    let mut file = PathFile::from_model(&model, &time_grid(args.samples)?)?;
    file.solution = Some(solution);
    emit_path(&file, &args.out, args.plot_data.as_deref())
}

fn run_cov(args: CovArgs) -> Result<()> {
    let ts = load_timeseries::<f64>(&args.input)?;
    let ts = if args.no_normalize {
        ts
    } else {
        ts.normalize(args.demean)?
    };
    if let Some(window_len) = ts.samples().checked_div(args.windows) {
        if window_len > 0 && window_len < ts.channels() {
            eprintln!(
                "warning: window length {window_len} is below the channel count {}; \
                 sample covariances are singular and will be repaired",
                ts.channels()
            );
        }
    }
    let seq = windowed_covariances(&ts, args.windows)?;
    save_json(&seq, &args.out)
}

fn parse_eps_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parsed = match parts.as_slice() {
        [lo, hi, count] => match (lo.parse(), hi.parse(), count.parse()) {
            (Ok(lo), Ok(hi), Ok(count)) => Some((lo, hi, count)),
            _ => None,
        },
        _ => None,
    };
    let (lo, hi, count) = parsed.ok_or_else(|| Error::InvalidArgument {
        reason: format!("bad eps grid {spec:?}: expected LO:HI:COUNT"),
    })?;
    geometric_grid(lo, hi, count)
}

fn run_fit(args: FitArgs) -> Result<()> {
    if args.family != Family::Wls && (args.eps.is_some() || args.eps_grid.is_some()) {
        return Err(Error::InvalidArgument {
            reason: format!(
                "--eps and --eps-grid apply to the wls family, not {}",
                args.family
            ),
        });
    }
    let seq: CovSequence64 = load_json(&args.covseq)?;
    let options = FitOptions {
        multistarts: args.multistart,
        seed: args.seed,
        max_iters: args.max_iters,
        eps: args.eps,
        jobs: args.jobs,
        ..FitOptions::default()
    };
    let result: FitResult<f64> = if args.family == Family::Wls && args.eps.is_none() {
        let grid = match &args.eps_grid {
            Some(spec) => parse_eps_grid(spec)?,
            None => {
                let (lo, hi, count) = DEFAULT_EPS_GRID;
                geometric_grid(lo, hi, count)?
            }
        };
        fit_eps_search(&seq, &grid, &options)?.0
    } else {
        fit(&seq, args.family, &options)?
    };
    save_json(&result, &args.out)
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let (seq, model) =
        synth_generate::<f64>(args.family, args.n, args.knots, args.noise, args.seed)?;
    save_json(&seq, &args.out)?;
    let truth = PathFile::from_model(&model, seq.times())?;
    save_json(&truth, &args.truth)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let file: PathFile<f64> = load_json(&args.model)?;
    let report: VerifyReport<f64> = match file.to_model()? {
        Some(model) => verify_parametric(
            &model,
            &model.natural_cost(),
            &file.times,
            &file.matrices,
            args.tol,
        )?,
        None => verify_sampled(
            &file.times,
            &file.matrices,
            file.steering.as_deref(),
            args.tol,
        )?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

/// Writes the sampled path as a wide CSV: a `t` column, the matrix entries
/// `P_11 .. P_nn` row-major, and, when steering samples are present,
/// `A_11 .. A_nn`. Values use the shortest round-trip decimal form, so they
/// parse back to exactly the numbers in the JSON path file.
fn write_plot_csv(file: &PathFile<f64>, path: &Path) -> Result<()> {
    if file.times.is_empty() || file.times.len() != file.matrices.len() {
        return Err(Error::InvalidArgument {
            reason: "path file has no sampled path to plot".into(),
        });
    }
    let n = file.matrices[0].dim();
    let dir = match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => parent,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir)?;
    let mut w = BufWriter::new(tmp);
    write!(w, "t")?;
    for i in 1..=n {
        for j in 1..=n {
            write!(w, ",P_{i}{j}")?;
        }
    }
    if file.steering.is_some() {
        for i in 1..=n {
            for j in 1..=n {
                write!(w, ",A_{i}{j}")?;
            }
        }
    }
    writeln!(w)?;
    for (k, t) in file.times.iter().enumerate() {
        write!(w, "{t}")?;
        let p = file.matrices[k].matrix();
        for i in 0..n {
            for j in 0..n {
                write!(w, ",{}", p[(i, j)])?;
            }
        }
        if let Some(steering) = &file.steering {
            let a = steering[k].matrix();
            for i in 0..n {
                for j in 0..n {
                    write!(w, ",{}", a[(i, j)])?;
                }
            }
        }
        writeln!(w)?;
    }
    let tmp = w
        .into_inner()
        .map_err(std::io::IntoInnerError::into_error)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
