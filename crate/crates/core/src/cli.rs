//! The `mpost` command line.
//!
//! Failures print one line, `error[<category>]: <message>`, and exit with the
//! category's code (usage 2, data 3, model 4, numerical 5). A diagnostics run
//! whose checks fail exits 1.
//!
//! `--config FILE` reads a flat TOML table whose keys are flag names. Its
//! entries are expanded into flags placed before the command-line ones, so
//! explicit flags win.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::data::{family_observations, regression_inputs, RegressionInputs, Scaling, Table};
use crate::diagnostics::{
    check_martingale, check_moment_bound, default_grid, prequential_argmax, prequential_family,
    prequential_grid, prequential_regression, regression_start, run_variance_trace, track_variance_ratio,
    CorruptedModel, DiagnosticsReport, VARIANCE_CHECKPOINTS, VARIANCE_TAIL,
};
use crate::error::{Error, Result};
use crate::format_float;
use crate::estimators::{
    default_family_method, default_regression_method, estimate_irls_t, estimate_logistic_newton,
    estimate_moments, estimate_ols, estimate_sgd_onepass, EstimatorMethod, EstimatorSpec,
};
use crate::models::{Family, FamilyOptions, PredictiveModel, FAMILY_NAMES};
use crate::regression::{DesignMatrix, RegressionFamily, RegressionModel, DEFAULT_KAPPA, REGRESSION_NAMES};
use crate::resampler::{batch_sample, ResampleConfig, SamplerMode, Temper, DEFAULT_EXACT_EXTRA};
use crate::stats::{
    coverage_experiment, credible_interval, default_kde_grid, hdr_threshold, kde, kde2d, summarize,
    CoverageScenario,
};

/// Exit code of a `check` run whose checks ran but did not all pass.
pub const EXIT_CHECK_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "mpost", version, about = "Martingale posteriors by predictive resampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw posterior samples for a model fitted to a CSV file.
    #[command(args_override_self = true)]
    Sample(SampleArgs),
    /// Frequentist coverage of credible intervals on simulated data.
    #[command(args_override_self = true)]
    Coverage(CoverageArgs),
    /// Martingale, moment-bound and variance-ratio diagnostics.
    #[command(args_override_self = true)]
    Check(CheckArgs),
    /// Prequential log-likelihood over a hyperparameter grid.
    #[command(args_override_self = true)]
    Prequential(PrequentialArgs),
    /// Kernel density estimate of posterior draws.
    #[command(args_override_self = true)]
    Kde(KdeArgs),
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    /// exponential, normal_mean, normal_var, student_t, normal_meanvar,
    /// mvnormal, linear_normal, robust_t or logistic.
    #[arg(long)]
    model: String,
    /// Degrees of freedom for student_t and robust_t.
    #[arg(long, default_value_t = 5.0)]
    nu: f64,
    /// Known variance for normal_mean.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Dimension for mvnormal (inferred from the data when omitted).
    #[arg(long)]
    dim: Option<usize>,
    /// Fisher-weight floor for logistic.
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
}

#[derive(Debug, Args, Serialize)]
struct SamplerArgs {
    /// exact, truncated or hybrid.
    #[arg(long, default_value = "hybrid")]
    mode: String,
    /// Number of posterior draws B.
    #[arg(long, default_value_t = 2000)]
    draws: usize,
    /// Truncation N = n + M for truncated and hybrid draws [default: 100·dim].
    #[arg(long)]
    trunc_extra: Option<usize>,
    /// Stopping index N = n + M for exact draws.
    #[arg(long, default_value_t = DEFAULT_EXACT_EXTRA)]
    exact_extra: usize,
    /// Learning-rate multiplier: one value, or dim² values of a row-major matrix.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', allow_negative_numbers = true, default_value = "1")]
    temper: Vec<f64>,
    /// Worker threads. Never changes results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Prepend an intercept column to regression designs (default).
    #[arg(long, overrides_with = "no_intercept")]
    intercept: bool,
    #[arg(long, overrides_with = "intercept")]
    no_intercept: bool,
    /// Scale the response and non-binary covariates of regression data to mean
    /// 0, sd 1. The constants go to the metadata sidecar.
    #[arg(long, overrides_with = "no_standardize")]
    standardize: bool,
    #[arg(long, overrides_with = "standardize")]
    no_standardize: bool,
}

#[derive(Debug, Args, Serialize)]
struct EstimatorArgs {
    /// moments, sgd_onepass, irls_t or logistic_newton [default: per model].
    #[arg(long)]
    estimator: Option<String>,
    /// Starting value for sgd_onepass, irls_t and logistic_newton.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', allow_negative_numbers = true)]
    theta0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long)]
    seed: u64,
    /// Draws CSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    /// Flat TOML file of flag values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CoverageArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    sampler: SamplerArgs,
    /// True parameter, comma separated.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    theta_star: Vec<f64>,
    /// Observations per simulated dataset.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    repeats: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// moments or sgd_onepass.
    #[arg(long, default_value = "moments")]
    estimator: String,
    #[arg(long)]
    seed: u64,
    /// Coverage CSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Data CSV; required for regression models.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    intercept: bool,
    #[arg(long)]
    no_intercept: bool,
    #[arg(long)]
    standardize: bool,
    /// Grid point, comma separated; repeat for several [default: 5-point grid].
    #[arg(long = "theta", allow_negative_numbers = true)]
    thetas: Vec<String>,
    /// martingale, moment_bound, variance_ratio (comma separated).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "martingale,moment_bound")]
    checks: Vec<String>,
    /// Monte Carlo draws per grid point.
    #[arg(long, default_value_t = 100_000)]
    mc_n: usize,
    /// Chains for the variance-ratio check.
    #[arg(long, default_value_t = 1000)]
    chains: usize,
    /// Observation count n the variance-ratio chains start from.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Adds a constant to every natural gradient (negative control).
    #[arg(long, allow_negative_numbers = true)]
    corrupt_offset: Option<f64>,
    /// Multiplies every natural gradient (negative control).
    #[arg(long)]
    corrupt_scale: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PrequentialArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    data: DataArgs,
    /// Hyperparameter being varied: nu, sigma2 or kappa.
    #[arg(long, default_value = "nu")]
    param: String,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', allow_negative_numbers = true)]
    theta0: Option<Vec<f64>>,
    /// Step-size offset: rate 1/(i + offset) [default: 0, or dim for regression].
    #[arg(long)]
    offset: Option<usize>,
    /// Table CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct KdeArgs {
    /// Draws CSV as written by `sample`.
    #[arg(long)]
    draws: PathBuf,
    #[arg(long)]
    column: String,
    /// Second column for a bivariate estimate.
    #[arg(long)]
    column2: Option<String>,
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// Grid half-width in posterior sds.
    #[arg(long, default_value_t = 6.0)]
    width: f64,
    /// Also report the equal-tailed interval at this level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let original: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let expanded = match expand_config(&original) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(&expanded) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            let body: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let line = body.join(" ");
            eprintln!("error[usage]: {}", line.trim_start_matches("error: "));
            return ErrorCategoryCode::USAGE;
        }
    };
    let ctx = RunContext { argv: original, effective: expanded, started: Instant::now() };
    let result = match &cli.command {
        Command::Sample(a) => cmd_sample(a, &ctx),
        Command::Coverage(a) => cmd_coverage(a, &ctx),
        Command::Check(a) => cmd_check(a, &ctx),
        Command::Prequential(a) => cmd_prequential(a, &ctx),
        Command::Kde(a) => cmd_kde(a, &ctx),
    };
    match result {
        Ok(code) => code,
        Err(e) => report(&e),
    }
}

struct ErrorCategoryCode;

impl ErrorCategoryCode {
    const USAGE: i32 = 2;
}

fn report(e: &Error) -> i32 {
    let cat = e.category();
    let msg = e.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", cat.as_str());
    cat.exit_code()
}

struct RunContext {
    argv: Vec<String>,
    effective: Vec<String>,
    started: Instant,
}

/// Replaces `--config FILE` with the file's entries as flags, inserted right
/// after the subcommand.
fn expand_config(argv: &[String]) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = Some(
                argv.get(i + 1).cloned().ok_or_else(|| Error::Config("--config needs a file".into()))?,
            );
        }
    }
    let Some(path) = path else { return Ok(argv.to_vec()) };
    let text =
        std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
    let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("config {path}: {e}")))?;
    let mut flags = Vec::new();
    for (key, value) in &table {
        let flag = key.replace('_', "-");
        if flag == "config" {
            return Err(Error::Config("config files cannot include other configs".into()));
        }
        match value {
            toml::Value::Boolean(true) => flags.push(format!("--{flag}")),
            toml::Value::Boolean(false) => flags.push(format!("--no-{flag}")),
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar_text).collect::<Result<Vec<_>>>()?;
                flags.push(format!("--{flag}={}", parts.join(",")));
            }
            v => flags.push(format!("--{flag}={}", scalar_text(v)?)),
        }
    }
    let insert_at = argv.iter().skip(1).position(|a| !a.starts_with('-')).map_or(argv.len(), |p| p + 2);
    let mut out = argv[..insert_at.min(argv.len())].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[insert_at.min(argv.len())..]);
    Ok(out)
}

fn scalar_text(v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(Error::Config(format!("unsupported config value {other}"))),
    }
}

fn is_regression(name: &str) -> bool {
    REGRESSION_NAMES.contains(&name)
}

fn check_model_name(name: &str) -> Result<()> {
    if FAMILY_NAMES.contains(&name) || is_regression(name) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "unknown model `{name}` (expected one of {}, {})",
            FAMILY_NAMES.join(", "),
            REGRESSION_NAMES.join(", ")
        )))
    }
}

fn build_family(m: &ModelArgs, dim: Option<usize>) -> Result<Family> {
    let opts = FamilyOptions { sigma2: m.sigma2, nu: m.nu, dim: m.dim.or(dim).unwrap_or(2) };
    Family::from_name(&m.model, opts)
}

fn build_temper(values: &[f64], dim: usize) -> Result<Temper> {
    let t = match values.len() {
        1 => Temper::Scalar(values[0]),
        k if k == dim * dim => Temper::Matrix(DMatrix::from_row_slice(dim, dim, values)),
        k => return Err(Error::Config(format!("--temper takes 1 or {} values, got {k}", dim * dim))),
    };
    t.validate(dim)?;
    Ok(t)
}

fn build_config(s: &SamplerArgs, n: usize, dim: usize, seed: u64) -> Result<ResampleConfig> {
    let mode: SamplerMode = s.mode.parse()?;
    let mut cfg = ResampleConfig::new(mode, n, dim, s.draws, seed)
        .with_exact_extra(n, s.exact_extra)
        .with_temper(build_temper(&s.temper, dim)?)
        .with_threads(s.threads);
    if let Some(m) = s.trunc_extra {
        cfg = cfg.with_trunc_extra(n, m);
    }
    cfg.validate(n, dim)?;
    Ok(cfg)
}

fn estimator_spec(e: &EstimatorArgs, method: EstimatorMethod, seed: u64) -> EstimatorSpec {
    EstimatorSpec {
        method,
        restarts: e.restarts,
        tol: e.tol,
        max_iter: e.max_iter,
        theta0: e.theta0.clone(),
        seed,
    }
}

/// Neutral starting value for one-pass recursions on iid families.
fn neutral_theta(family: &Family) -> Vec<f64> {
    match family {
        Family::ExponentialScale | Family::NormalVarianceOnly => vec![1.0],
        Family::NormalKnownVar { .. } | Family::StudentTLocation { .. } => vec![0.0],
        Family::NormalMeanVar => vec![0.0, 1.0],
        Family::MultivariateNormal { dim } => {
            let d = *dim;
            let mut t = vec![0.0; d];
            t.extend(std::iter::repeat_n(1.0, d));
            t.extend(crate::models::mvn_offdiag_pairs(d).map(|_| 0.0));
            t
        }
    }
}

fn regression_model(m: &ModelArgs, design: DesignMatrix) -> Result<RegressionModel> {
    Ok(RegressionModel::new(RegressionFamily::from_name(&m.model, m.nu, m.kappa)?, design))
}

fn fit_regression(model: &RegressionModel, y: &[f64], e: &EstimatorArgs, seed: u64) -> Result<(Vec<f64>, EstimatorMethod)> {
    let method = match &e.estimator {
        Some(s) => s.parse()?,
        None => default_regression_method(model.family()),
    };
    let spec = estimator_spec(e, method, seed);
    spec.validate()?;
    let theta = match (method, model.family()) {
        (EstimatorMethod::Moments, RegressionFamily::NormalLinear) => estimate_ols(model.design(), y)?,
        (EstimatorMethod::IrlsT, RegressionFamily::RobustTLinear { nu, .. }) => {
            estimate_irls_t(model.design(), y, *nu, &spec)?.theta
        }
        (EstimatorMethod::LogisticNewton, RegressionFamily::LogisticTruncated { .. }) => {
            estimate_logistic_newton(model.design(), y, &spec)?
        }
        (m, f) => {
            return Err(Error::Config(format!("estimator {m:?} does not apply to {}", f.family_name())));
        }
    };
    Ok((theta, method))
}

fn fit_family(family: &Family, data: &[f64], e: &EstimatorArgs) -> Result<(Vec<f64>, EstimatorMethod)> {
    let method = match &e.estimator {
        Some(s) => s.parse()?,
        None => default_family_method(family),
    };
    let theta = match method {
        EstimatorMethod::Moments => estimate_moments(family, data)?,
        EstimatorMethod::SgdOnepass => {
            let t0 = e.theta0.clone().unwrap_or_else(|| neutral_theta(family));
            estimate_sgd_onepass(family, data, &t0)?
        }
        m => return Err(Error::Config(format!("estimator {m:?} does not apply to {}", family.family_name()))),
    };
    Ok((theta, method))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_metadata(out: &Path, ctx: &RunContext, command: &str, args: &impl Serialize, extra: serde_json::Value) -> Result<()> {
    let meta = json!({
        "tool": "mpost",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": ctx.argv,
        "effective_args": ctx.effective,
        "config": args,
        "result": extra,
        "wall_time_secs": ctx.started.elapsed().as_secs_f64(),
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(sidecar_path(out), text + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(f))
}

fn use_intercept(intercept: bool, no_intercept: bool) -> bool {
    intercept || !no_intercept
}

fn cmd_sample(a: &SampleArgs, ctx: &RunContext) -> Result<i32> {
    check_model_name(&a.model.model)?;
    let table = Table::read_path(&a.data.data)?;
    if is_regression(&a.model.model) {
        let inputs =
            regression_inputs(&table, use_intercept(a.data.intercept, a.data.no_intercept), a.data.standardize)?;
        let model = regression_model(&a.model, inputs.design)?;
        let (theta, method) = fit_regression(&model, &inputs.y, &a.estimator, a.seed)?;
        sample_and_write(&model, &theta, inputs.y.len(), method, &inputs.scaling, a, ctx)
    } else {
        let family = build_family(&a.model, Some(table.columns.len()))?;
        let data = family_observations(&table, &family)?;
        let (theta, method) = fit_family(&family, &data, &a.estimator)?;
        let n = data.len() / family.obs_dim();
        sample_and_write(&family, &theta, n, method, &[], a, ctx)
    }
}

fn sample_and_write<M: PredictiveModel>(
    model: &M,
    theta: &[f64],
    n: usize,
    method: EstimatorMethod,
    scaling: &[Scaling],
    a: &SampleArgs,
    ctx: &RunContext,
) -> Result<i32> {
    let cfg = build_config(&a.sampler, n, model.dim(), a.seed)?;
    let draws = batch_sample(model, theta, n, &cfg)?;
    let mut w = create(&a.out)?;
    draws.write_csv(&mut w)?;
    w.flush()?;
    write_metadata(
        &a.out,
        ctx,
        "sample",
        a,
        json!({ "estimator": method, "estimate": theta, "n": n, "standardization": scaling, "draws": draws.meta }),
    )?;
    Ok(0)
}

fn cmd_coverage(a: &CoverageArgs, ctx: &RunContext) -> Result<i32> {
    check_model_name(&a.model.model)?;
    if is_regression(&a.model.model) {
        return Err(Error::Config("coverage runs on iid families only".into()));
    }
    let dim_guess = if a.model.model == "mvnormal" && a.model.dim.is_none() {
        // d + d(d+1)/2 parameters
        (1..16).find(|d| d + d * (d + 1) / 2 == a.theta_star.len())
    } else {
        None
    };
    let family = build_family(&a.model, dim_guess)?;
    let p = family.param_dim();
    if a.theta_star.len() != p {
        return Err(Error::Config(format!("--theta-star needs {p} values, got {}", a.theta_star.len())));
    }
    let mut s = CoverageScenario::new(family, a.theta_star.clone(), a.n, a.repeats, a.sampler.draws, a.seed);
    s.mode = a.sampler.mode.parse()?;
    if let Some(m) = a.sampler.trunc_extra {
        s.trunc_extra = m;
    }
    s.exact_extra = a.sampler.exact_extra;
    s.temper = build_temper(&a.sampler.temper, p)?;
    s.level = a.level;
    s.estimator = a.estimator.parse()?;
    s.threads = a.sampler.threads;
    let result = coverage_experiment(&s)?;
    let mut w = create(&a.out)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    write_metadata(&a.out, ctx, "coverage", a, json!({ "repeats": result.repeats, "failed": result.failed, "scenario": result.scenario }))?;
    Ok(0)
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad grid value `{v}`"))))
        .collect()
}

fn cmd_check(a: &CheckArgs, ctx: &RunContext) -> Result<i32> {
    check_model_name(&a.model.model)?;
    let run = || -> Result<DiagnosticsReport> {
        if is_regression(&a.model.model) {
            let path = a.data.as_ref().ok_or_else(|| Error::Config("regression checks need --data".into()))?;
            let table = Table::read_path(path)?;
            let RegressionInputs { design, y, .. } =
                regression_inputs(&table, use_intercept(a.intercept, a.no_intercept), a.standardize)?;
            let model = regression_model(&a.model, design)?;
            let est = EstimatorArgs { estimator: None, theta0: None, restarts: 10, tol: 1e-8, max_iter: 200 };
            let (theta, _) = fit_regression(&model, &y, &est, a.seed)?;
            let grid = if a.thetas.is_empty() { vec![theta.clone()] } else { a.thetas.iter().map(|t| parse_point(t)).collect::<Result<_>>()? };
            run_checks(&model, &grid, &theta, a.n, a)
        } else {
            let dim = a.thetas.first().and_then(|t| {
                let k = t.split(',').count();
                (1..16).find(|d| d + d * (d + 1) / 2 == k)
            });
            let family = build_family(&a.model, dim)?;
            let grid = if a.thetas.is_empty() {
                default_grid(&family)
            } else {
                a.thetas.iter().map(|t| parse_point(t)).collect::<Result<_>>()?
            };
            let theta_n = grid[grid.len() / 2].clone();
            run_checks(&family, &grid, &theta_n, a.n, a)
        }
    };
    let report = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    print!("{}", report.to_text());
    if let Some(out) = &a.out {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(out, text + "\n")?;
        write_metadata(out, ctx, "check", a, json!({ "passed": report.passed() }))?;
    }
    Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
}

fn run_checks<M: PredictiveModel + Clone>(
    model: &M,
    grid: &[Vec<f64>],
    theta_n: &[f64],
    n: usize,
    a: &CheckArgs,
) -> Result<DiagnosticsReport> {
    let corrupted = CorruptedModel {
        inner: model.clone(),
        offset: a.corrupt_offset.unwrap_or(0.0),
        scale: a.corrupt_scale.unwrap_or(1.0),
    };
    let explicit = a.checks.len() != 2 || a.checks.iter().any(|c| c != "martingale" && c != "moment_bound");
    let mut report = DiagnosticsReport::default();
    for check in &a.checks {
        let entry = match check.as_str() {
            "martingale" => check_martingale(&corrupted, grid, a.mc_n, a.seed),
            "moment_bound" => match check_moment_bound(&corrupted, grid, a.mc_n, a.seed) {
                Err(Error::NoBoundAvailable(name)) if !explicit => {
                    eprintln!("note: {name} has no analytic moment bound; skipped");
                    continue;
                }
                r => r,
            },
            "variance_ratio" => run_variance_trace(
                &corrupted,
                theta_n,
                n.max(1),
                a.chains,
                &Temper::default(),
                &VARIANCE_CHECKPOINTS,
                VARIANCE_TAIL,
                a.seed,
            )
            .and_then(|t| track_variance_ratio(&t)),
            other => return Err(Error::Config(format!("unknown check `{other}`"))),
        }?;
        report.entries.push(entry);
    }
    Ok(report)
}

fn cmd_prequential(a: &PrequentialArgs, ctx: &RunContext) -> Result<i32> {
    check_model_name(&a.model.model)?;
    let table = Table::read_path(&a.data.data)?;
    let with = |v: f64| -> Result<ModelArgs> {
        let mut m = ModelArgs { model: a.model.model.clone(), nu: a.model.nu, sigma2: a.model.sigma2, dim: a.model.dim, kappa: a.model.kappa };
        match a.param.as_str() {
            "nu" => m.nu = v,
            "sigma2" => m.sigma2 = v,
            "kappa" => m.kappa = v,
            other => return Err(Error::Config(format!("unknown hyperparameter `{other}` (nu, sigma2, kappa)"))),
        }
        Ok(m)
    };
    let rows = if is_regression(&a.model.model) {
        let RegressionInputs { design, y, .. } =
            regression_inputs(&table, use_intercept(a.data.intercept, a.data.no_intercept), a.data.standardize)?;
        prequential_grid(&a.grid, |v| {
            let model = regression_model(&with(v)?, design.clone())?;
            let theta0 = a.theta0.clone().unwrap_or_else(|| regression_start(model.family(), &design, &y));
            prequential_regression(&model, &y, &theta0, a.offset.unwrap_or(model.dim()))
        })?
    } else {
        prequential_grid(&a.grid, |v| {
            let family = build_family(&with(v)?, Some(table.columns.len()))?;
            let data = family_observations(&table, &family)?;
            let theta0 = a.theta0.clone().unwrap_or_else(|| neutral_theta(&family));
            if a.offset.is_some_and(|o| o > 0) {
                return Err(Error::Config("--offset applies to regression models only".into()));
            }
            prequential_family(&family, &data, &theta0)
        })?
    };
    let best = prequential_argmax(&rows);
    let mut text = String::from("value,loglik\n");
    for r in &rows {
        text.push_str(&format!("{},{}\n", format_float(r.value), format_float(r.loglik)));
    }
    match &a.out {
        Some(out) => {
            std::fs::write(out, &text)?;
            write_metadata(out, ctx, "prequential", a, json!({ "selected": best, "table": rows }))?;
            if let Some(b) = best {
                println!("selected {}={b}", a.param);
            }
        }
        None => print!("{text}"),
    }
    Ok(0)
}

fn cmd_kde(a: &KdeArgs, ctx: &RunContext) -> Result<i32> {
    let table = Table::read_path(&a.draws)?;
    let x = table.column(&a.column)?;
    if a.points < 2 {
        return Err(Error::Config("--points must be >= 2".into()));
    }
    let mut w = create(&a.out)?;
    let extra = match &a.column2 {
        None => {
            let grid = default_kde_grid(x, a.points, a.width)?;
            let dens = kde(x, &grid)?;
            writeln!(w, "grid,density")?;
            for (g, d) in grid.iter().zip(&dens) {
                writeln!(w, "{},{}", format_float(*g), format_float(*d))?;
            }
            let ci = credible_interval(x, a.level)?;
            json!({ "summary": summarize(x)?, "interval": ci })
        }
        Some(c2) => {
            let y = table.column(c2)?;
            let gx = default_kde_grid(x, a.points, a.width)?;
            let gy = default_kde_grid(y, a.points, a.width)?;
            let dens = kde2d(x, y, &gx, &gy)?;
            writeln!(w, "x,y,density")?;
            for (i, xv) in gx.iter().enumerate() {
                for (j, yv) in gy.iter().enumerate() {
                    writeln!(w, "{},{},{}", format_float(*xv), format_float(*yv), format_float(dens[i * gy.len() + j]))?;
                }
            }
            json!({ "hdr95_threshold": hdr_threshold(&dens, 0.95) })
        }
    };
    w.flush()?;
    write_metadata(&a.out, ctx, "kde", a, extra)?;
    Ok(0)
}
