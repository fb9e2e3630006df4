//! Predictive resampling.
//!
//! A chain starts at the initial estimate `θ_n` and repeatedly imputes an
//! observation from the current predictive, then moves
//! `θ_N = θ_{N-1} + a N⁻¹ Z_N`. Exact and truncated draws stop the chain at a
//! fixed `N`. Hybrid draws stop early and add a Gaussian term with covariance
//! `a² r_N² I(θ_N)⁻¹` for the part of the chain that was not simulated.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format_float;
use crate::linalg::min_eigenvalue;
use crate::models::PredictiveModel;
use crate::rng::{stream, Purpose};

/// Extra imputed steps for exact draws unless configured otherwise.
pub const DEFAULT_EXACT_EXTRA: usize = 20_000;

/// Fraction of aborted chains above which a batch fails.
pub const MAX_ABORT_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMode {
    Exact,
    Truncated,
    Hybrid,
}

impl std::str::FromStr for SamplerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SamplerMode::Exact),
            "truncated" => Ok(SamplerMode::Truncated),
            "hybrid" => Ok(SamplerMode::Hybrid),
            other => Err(Error::Config(format!("unknown mode `{other}` (exact, truncated, hybrid)"))),
        }
    }
}

/// Learning-rate multiplier: `a N⁻¹` with scalar `a > 0`, or `A N⁻¹` with `A`
/// positive definite.
#[derive(Debug, Clone, PartialEq)]
pub enum Temper {
    Scalar(f64),
    Matrix(DMatrix<f64>),
}

impl Default for Temper {
    fn default() -> Self {
        Temper::Scalar(1.0)
    }
}

impl Temper {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Temper::Scalar(a) if !(*a > 0.0 && a.is_finite()) => {
                Err(Error::Config(format!("temper must be positive, got {a}")))
            }
            Temper::Scalar(_) => Ok(()),
            Temper::Matrix(m) => {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::Config(format!(
                        "temper matrix is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if (m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max()) {
                    return Err(Error::Config("temper matrix must be symmetric".into()));
                }
                let min_eig = min_eigenvalue(m);
                if !(min_eig > 0.0) {
                    return Err(Error::Config(format!(
                        "temper matrix must be positive definite (smallest eigenvalue {min_eig:e})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `a Σ aᵀ` for the Gaussian correction.
    fn scale_covariance(&self, cov: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Temper::Scalar(a) => cov * (a * a),
            Temper::Matrix(m) => m * cov * m.transpose(),
        }
    }
}

impl Serialize for Temper {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Temper::Scalar(a) => s.serialize_f64(*a),
            Temper::Matrix(m) => {
                let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
                rows.serialize(s)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResampleConfig {
    pub mode: SamplerMode,
    /// Stopping index for truncated and hybrid draws.
    pub trunc_n: usize,
    /// Stopping index for exact draws.
    pub exact_n: usize,
    pub draws: usize,
    pub temper: Temper,
    pub master_seed: u64,
    /// Accumulate `Σ a² i⁻² diag I(θ_{i-1})⁻¹` per chain.
    pub track_variance: bool,
    /// Worker cap. Never changes the output.
    pub threads: Option<usize>,
}

impl ResampleConfig {
    /// Defaults for `n` observations and a `dim`-dimensional parameter:
    /// `trunc_n = n + 100·dim`, `exact_n = n + 20000`.
    pub fn new(mode: SamplerMode, n: usize, dim: usize, draws: usize, master_seed: u64) -> Self {
        Self {
            mode,
            trunc_n: n + 100 * dim,
            exact_n: n + DEFAULT_EXACT_EXTRA,
            draws,
            temper: Temper::default(),
            master_seed,
            track_variance: false,
            threads: None,
        }
    }

    pub fn with_trunc_extra(mut self, n: usize, extra: usize) -> Self {
        self.trunc_n = n + extra;
        self
    }

    pub fn with_exact_extra(mut self, n: usize, extra: usize) -> Self {
        self.exact_n = n + extra;
        self
    }

    pub fn with_temper(mut self, temper: Temper) -> Self {
        self.temper = temper;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Index at which a chain stops under the configured mode.
    pub fn stop_index(&self) -> usize {
        match self.mode {
            SamplerMode::Exact => self.exact_n,
            SamplerMode::Truncated | SamplerMode::Hybrid => self.trunc_n,
        }
    }

    pub fn validate(&self, n: usize, dim: usize) -> Result<()> {
        if self.draws == 0 {
            return Err(Error::Config("draws must be >= 1".into()));
        }
        if self.trunc_n < n {
            return Err(Error::Config(format!("truncation {} is below n = {n}", self.trunc_n)));
        }
        if self.exact_n < n {
            return Err(Error::Config(format!("exact truncation {} is below n = {n}", self.exact_n)));
        }
        if n == 0 && self.stop_index() > 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        self.temper.validate(dim)
    }
}

/// `r_N² = Σ_{i=N+1}^∞ i⁻²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWeight {
    pub n: usize,
    pub r_sq: f64,
}

/// Computes `r_N²` to about machine precision: explicit terms below 64 plus an
/// Euler–Maclaurin tail for `Σ_{i≥M} i⁻²`.
pub fn tail_weight(n: usize) -> TailWeight {
    assert!(n >= 1, "tail weight needs N >= 1");
    const SWITCH: usize = 64;
    let m = (n + 1).max(SWITCH) as f64;
    let inv = 1.0 / m;
    let inv2 = inv * inv;
    // 1/M + 1/(2M²) + 1/(6M³) − 1/(30M⁵) + 1/(42M⁷) − 1/(30M⁹)
    let mut sum = inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
    for i in ((n + 1)..SWITCH).rev() {
        let x = i as f64;
        sum += 1.0 / (x * x);
    }
    TailWeight { n, r_sq: sum }
}

/// One chain of predictive resampling.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Real plus imputed observations so far.
    pub step: usize,
    /// Running `Σ a² i⁻² diag I(θ_{i-1})⁻¹`, when tracked.
    pub cond_var: Option<Vec<f64>>,
}

impl ChainState {
    pub fn new(theta: Vec<f64>, n: usize, track_variance: bool) -> Self {
        let cond_var = track_variance.then(|| vec![0.0; theta.len()]);
        Self { theta, step: n, cond_var }
    }
}

/// Moves the chain by a given natural gradient `z`: `θ += a z / N` with
/// `N = step + 1`. Checks the domain afterwards.
pub fn apply_update<M: PredictiveModel + ?Sized>(
    state: &mut ChainState,
    model: &M,
    z: &[f64],
    temper: &Temper,
) -> Result<()> {
    let big_n = (state.step + 1) as f64;
    match temper {
        Temper::Scalar(a) => {
            let rate = a / big_n;
            for (t, zi) in state.theta.iter_mut().zip(z) {
                *t += rate * zi;
            }
        }
        Temper::Matrix(m) => {
            for (j, t) in state.theta.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, zk) in z.iter().enumerate() {
                    acc += m[(j, k)] * zk;
                }
                *t += acc / big_n;
            }
        }
    }
    state.step += 1;
    model.check_domain(&state.theta)
}

/// Imputes one observation and applies the update.
#[inline]
pub fn step_chain<M: PredictiveModel, R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &M,
    temper: &Temper,
    rng: &mut R,
    z: &mut [f64],
) -> Result<()> {
    if state.cond_var.is_some() {
        let cov = temper.scale_covariance(&model.fisher_inverse(&state.theta)?);
        let big_n = (state.step + 1) as f64;
        let w = 1.0 / (big_n * big_n);
        if let Some(acc) = state.cond_var.as_mut() {
            for (j, a) in acc.iter_mut().enumerate() {
                *a += w * cov[(j, j)];
            }
        }
    }
    model.impute_update(&state.theta, rng, z)?;
    apply_update(state, model, z, temper)
}

/// Runs `state` forward until `state.step == until`.
pub fn run_chain<M: PredictiveModel, R: Rng + ?Sized>(
    state: &mut ChainState,
    model: &M,
    temper: &Temper,
    until: usize,
    rng: &mut R,
) -> Result<()> {
    let mut z = vec![0.0; model.dim()];
    while state.step < until {
        step_chain(state, model, temper, rng, &mut z)?;
    }
    Ok(())
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn principal_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) {
        return Err(Error::NotPd { min_eig });
    }
    let root = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.sqrt()));
    let s = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok((&s + s.transpose()) * 0.5)
}

/// Covariance of the Gaussian tail correction at step `big_n`:
/// `r_N² a I(θ_N)⁻¹ aᵀ`.
pub fn tail_covariance<M: PredictiveModel + ?Sized>(
    model: &M,
    theta: &[f64],
    big_n: usize,
    temper: &Temper,
) -> Result<DMatrix<f64>> {
    let r_sq = tail_weight(big_n).r_sq;
    Ok(temper.scale_covariance(&model.fisher_inverse(theta)?) * r_sq)
}

/// `θ_N + Σ̂_N^{1/2} ε` for a supplied standard-normal vector `eps`.
pub fn hybrid_finish<M: PredictiveModel + ?Sized>(
    model: &M,
    theta: &[f64],
    big_n: usize,
    temper: &Temper,
    eps: &[f64],
) -> Result<Vec<f64>> {
    let cov = tail_covariance(model, theta, big_n, temper)?;
    if theta.len() == 1 {
        let v = cov[(0, 0)];
        if !(v > 0.0) {
            return Err(Error::NotPd { min_eig: v });
        }
        return Ok(vec![theta[0] + v.sqrt() * eps[0]]);
    }
    let root = principal_sqrt(&cov)?;
    let shift = root * DVector::from_column_slice(eps);
    Ok(theta.iter().zip(shift.iter()).map(|(t, s)| t + s).collect())
}

/// One hybrid posterior draw: impute up to `config.trunc_n`, then add the
/// Gaussian tail correction.
pub fn hybrid_draw<M: PredictiveModel, R: Rng + ?Sized>(
    model: &M,
    theta_n: &[f64],
    n: usize,
    config: &ResampleConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut state = ChainState::new(theta_n.to_vec(), n, false);
    run_chain(&mut state, model, &config.temper, config.trunc_n, rng)?;
    let eps: Vec<f64> = (0..model.dim()).map(|_| StandardNormal.sample(rng)).collect();
    hybrid_finish(model, &state.theta, state.step.max(1), &config.temper, &eps)
}

#[derive(Debug, Clone, Serialize)]
pub struct DrawsMetadata {
    pub model: String,
    pub mode: SamplerMode,
    pub n: usize,
    pub theta_n: Vec<f64>,
    pub trunc_n: usize,
    pub exact_n: usize,
    pub draws: usize,
    pub temper: Temper,
    pub master_seed: u64,
    /// Chains whose first attempt left the domain.
    pub aborted: usize,
    /// Chains that succeeded on the retry stream.
    pub retried: usize,
    /// Hybrid rows outside the parameter domain (returned unchanged).
    pub out_of_domain: usize,
    pub wall_time_secs: f64,
}

/// `B × p` posterior draws, row-major.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub meta: DrawsMetadata,
    /// Per-chain accumulated conditional variance, row-major like `values`.
    pub cond_var: Option<Vec<f64>>,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, b: usize) -> &[f64] {
        let p = self.dim();
        &self.values[b * p..(b + 1) * p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim()).copied().collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.names)?;
        for b in 0..self.len() {
            out.write_record(self.row(b).iter().map(|v| format_float(*v)))?;
        }
        out.flush()?;
        Ok(())
    }
}

enum ChainOutcome {
    Ok { row: Vec<f64>, cond_var: Option<Vec<f64>>, retried: bool },
    Failed(Error),
}

fn one_chain<M: PredictiveModel>(
    model: &M,
    theta_n: &[f64],
    n: usize,
    config: &ResampleConfig,
    b: usize,
    retry: u32,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let mut rng = stream(config.master_seed, Purpose::Chain, b as u64, retry);
    let mut state = ChainState::new(theta_n.to_vec(), n, config.track_variance);
    run_chain(&mut state, model, &config.temper, config.stop_index(), &mut rng)?;
    let row = match config.mode {
        SamplerMode::Exact | SamplerMode::Truncated => state.theta,
        SamplerMode::Hybrid => {
            let eps: Vec<f64> = (0..model.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
            hybrid_finish(model, &state.theta, state.step.max(1), &config.temper, &eps)?
        }
    };
    Ok((row, state.cond_var))
}

/// Draws `config.draws` independent posterior samples. Draw `b` uses the
/// stream `(master_seed, b)`, so the matrix does not depend on scheduling.
pub fn batch_sample<M: PredictiveModel>(
    model: &M,
    theta_n: &[f64],
    n: usize,
    config: &ResampleConfig,
) -> Result<PosteriorDraws> {
    let p = model.dim();
    config.validate(n, p)?;
    model.check_domain(theta_n)?;
    let started = Instant::now();

    let run = |b: usize| -> ChainOutcome {
        match one_chain(model, theta_n, n, config, b, 0) {
            Ok((row, cond_var)) => ChainOutcome::Ok { row, cond_var, retried: false },
            Err(Error::Domain(_)) => match one_chain(model, theta_n, n, config, b, 1) {
                Ok((row, cond_var)) => ChainOutcome::Ok { row, cond_var, retried: true },
                Err(e) => ChainOutcome::Failed(e),
            },
            Err(e) => ChainOutcome::Failed(e),
        }
    };
    let outcomes: Vec<ChainOutcome> = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| (0..config.draws).into_par_iter().map(run).collect()),
        None => (0..config.draws).into_par_iter().map(run).collect(),
    };

    let mut values = Vec::with_capacity(config.draws * p);
    let mut cond = config.track_variance.then(|| Vec::with_capacity(config.draws * p));
    let mut retried = 0;
    let mut failed = 0;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            ChainOutcome::Ok { row, cond_var, retried: r } => {
                retried += usize::from(r);
                values.extend_from_slice(&row);
                if let (Some(acc), Some(cv)) = (cond.as_mut(), cond_var) {
                    acc.extend_from_slice(&cv);
                }
            }
            ChainOutcome::Failed(e) => {
                failed += 1;
                first_failure.get_or_insert(e);
            }
        }
    }
    let aborted = retried + failed;
    if let Some(e) = first_failure {
        if !matches!(e, Error::Domain(_)) {
            return Err(e);
        }
        return Err(Error::BatchFailed {
            aborted,
            total: config.draws,
            reason: format!("{failed} chains failed twice; last error: {e}"),
        });
    }
    if aborted as f64 > MAX_ABORT_FRACTION * config.draws as f64 {
        return Err(Error::BatchFailed {
            aborted,
            total: config.draws,
            reason: "too many chains left the parameter domain".into(),
        });
    }
    let out_of_domain = if config.mode == SamplerMode::Hybrid {
        values.chunks_exact(p).filter(|r| model.check_domain(r).is_err()).count()
    } else {
        0
    };

    Ok(PosteriorDraws {
        names: model.param_names(),
        values,
        cond_var: cond,
        meta: DrawsMetadata {
            model: model.name().to_string(),
            mode: config.mode,
            n,
            theta_n: theta_n.to_vec(),
            trunc_n: config.trunc_n,
            exact_n: config.exact_n,
            draws: config.draws,
            temper: config.temper.clone(),
            master_seed: config.master_seed,
            aborted,
            retried,
            out_of_domain,
            wall_time_secs: started.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    /// Partial sum up to `m` plus the integral bracket
    /// `[1/(m+1), 1/m]` for the remainder. Returns (lower, upper).
    fn tail_oracle(n: usize, m: usize) -> (f64, f64) {
        let mut s = 0.0;
        for i in ((n + 1)..=m).rev() {
            let x = i as f64;
            s += 1.0 / (x * x);
        }
        (s + 1.0 / (m as f64 + 1.0), s + 1.0 / m as f64)
    }

    #[test]
    fn tail_weight_against_partial_sums() {
        for n in [1usize, 2, 10, 63, 64, 65, 100, 1000] {
            let (lo, hi) = tail_oracle(n, 10_000_000);
            let r = tail_weight(n).r_sq;
            assert!(r >= lo - 1e-13 && r <= hi + 1e-13, "n={n}: {r} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn tail_weight_examples() {
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((tail_weight(1).r_sq - (pi2_6 - 1.0)).abs() < 1e-12);
        // Frozen from the partial-sum oracle above.
        assert!((tail_weight(10).r_sq - 0.095_166_335_681_685_75).abs() < 1e-16);
        let r10 = tail_weight(10).r_sq;
        assert!(1.0 / 11.0 <= r10 && r10 <= 0.1);
        let big = 1_000_000;
        assert!((big as f64 * tail_weight(big).r_sq - 1.0).abs() < 1e-3);
    }

    #[test]
    fn tail_weight_brackets() {
        for n in [1usize, 5, 50, 500, 5_000, 50_000, 1 << 30] {
            let r = tail_weight(n).r_sq;
            assert!(1.0 / (n as f64 + 1.0) <= r && r <= 1.0 / n as f64, "n={n}");
        }
    }

    #[test]
    fn step_examples() {
        let f = Family::exponential();
        let z = f.natural_gradient(&[1.0], &[2.0]).unwrap();
        let mut s = ChainState::new(vec![1.0], 9, false);
        apply_update(&mut s, &f, &z, &Temper::Scalar(1.0)).unwrap();
        assert!((s.theta[0] - 1.1).abs() < 1e-15);
        assert_eq!(s.step, 10);

        let mut s = ChainState::new(vec![1.0], 9, false);
        apply_update(&mut s, &f, &z, &Temper::Scalar(2.0)).unwrap();
        assert!((s.theta[0] - 1.2).abs() < 1e-15);

        let g = Family::normal_variance_only();
        let z = g.natural_gradient(&[2.0], &[0.0]).unwrap();
        let mut s = ChainState::new(vec![2.0], 3, false);
        apply_update(&mut s, &g, &z, &Temper::Scalar(1.0)).unwrap();
        assert!((s.theta[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn domain_exit_is_an_error() {
        let f = Family::exponential();
        let mut s = ChainState::new(vec![1.0], 1, false);
        // a = 10 at N = 2 with Y = 0: θ' = 1 − 5 < 0.
        let z = f.natural_gradient(&[1.0], &[0.0]).unwrap();
        assert!(matches!(apply_update(&mut s, &f, &z, &Temper::Scalar(10.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn principal_sqrt_examples() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((principal_sqrt(&i).unwrap() - &i).abs().max() < 1e-14);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0]));
        let s = principal_sqrt(&d).unwrap();
        assert!((s - DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]))).abs().max() < 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = principal_sqrt(&m).unwrap();
        assert!((&s * &s - &m).abs().max() < 1e-10 * 2.0);
        assert!(min_eigenvalue(&s) > 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(principal_sqrt(&bad), Err(Error::NotPd { .. })));
    }

    #[test]
    fn hybrid_finish_examples() {
        let f = Family::exponential();
        let t = Temper::Scalar(1.0);
        assert_eq!(hybrid_finish(&f, &[2.0], 100, &t, &[0.0]).unwrap(), vec![2.0]);
        let v = hybrid_finish(&f, &[2.0], 100, &t, &[1.0]).unwrap()[0];
        let expected = 2.0 + 2.0 * tail_weight(100).r_sq.sqrt();
        assert!((v - expected).abs() < 1e-14);
        assert!((v - 2.19950).abs() < 1e-5);
        // Matrix temper equal to a·I reproduces the scalar case.
        let mvn = Family::multivariate_normal(2).unwrap();
        let theta = [0.0, 0.0, 1.0, 2.0, 0.5];
        let eps = [0.3, -1.0, 0.5, 2.0, -0.7];
        let a = hybrid_finish(&mvn, &theta, 50, &Temper::Scalar(1.5), &eps).unwrap();
        let b = hybrid_finish(&mvn, &theta, 50, &Temper::Matrix(DMatrix::identity(5, 5) * 1.5), &eps)
            .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_at_n_returns_theta_n() {
        let f = Family::exponential();
        let cfg = ResampleConfig::new(SamplerMode::Truncated, 10, 1, 20, 1).with_trunc_extra(10, 0);
        let d = batch_sample(&f, &[1.3], 10, &cfg).unwrap();
        assert!(d.values.iter().all(|v| *v == 1.3));
    }

    #[test]
    fn hybrid_degenerate_truncation_is_direct_gaussian() {
        let f = Family::exponential();
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 10, 1, 1, 1).with_trunc_extra(10, 0);
        let mut rng = stream(5, Purpose::Chain, 0, 0);
        let v = hybrid_draw(&f, &[1.3], 10, &cfg, &mut rng).unwrap()[0];
        let mut rng = stream(5, Purpose::Chain, 0, 0);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let expected = 1.3 + 1.3 * tail_weight(10).r_sq.sqrt() * eps;
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn batch_is_thread_independent() {
        let f = Family::student_t(5.0).unwrap();
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 20, 1, 100, 42).with_trunc_extra(20, 30);
        let a = batch_sample(&f, &[0.4], 20, &cfg.clone().with_threads(Some(1))).unwrap();
        let b = batch_sample(&f, &[0.4], 20, &cfg.with_threads(Some(4))).unwrap();
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn batch_rejects_bad_config() {
        let f = Family::exponential();
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 10, 1, 0, 1);
        assert!(matches!(batch_sample(&f, &[1.0], 10, &cfg), Err(Error::Config(_))));
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 10, 1, 5, 1).with_trunc_extra(5, 0);
        assert!(matches!(batch_sample(&f, &[1.0], 10, &cfg), Err(Error::Config(_))));
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 10, 1, 5, 1).with_temper(Temper::Scalar(-1.0));
        assert!(matches!(batch_sample(&f, &[1.0], 10, &cfg), Err(Error::Config(_))));
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 10, 1, 5, 1);
        assert!(matches!(batch_sample(&f, &[-1.0], 10, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn heavy_tempering_aborts_fail_loudly() {
        // a = 50 starting at n = 2 leaves the domain almost surely.
        let f = Family::exponential();
        let cfg = ResampleConfig::new(SamplerMode::Truncated, 2, 1, 50, 3)
            .with_trunc_extra(2, 20)
            .with_temper(Temper::Scalar(50.0));
        assert!(matches!(batch_sample(&f, &[1.0], 2, &cfg), Err(Error::BatchFailed { .. })));
    }

    #[test]
    fn csv_output_has_header_and_rows() {
        let f = Family::normal_mean_var();
        let cfg = ResampleConfig::new(SamplerMode::Hybrid, 30, 2, 3, 9).with_trunc_extra(30, 5);
        let d = batch_sample(&f, &[0.0, 1.0], 30, &cfg).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "mean,variance");
        assert_eq!(lines.len(), 4);
    }
}
