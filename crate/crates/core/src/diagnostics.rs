//! Runtime checks of the modelling assumptions behind predictive resampling.
//!
//! Every check returns a [`CheckEntry`] carrying its statistic, its threshold
//! and the Monte Carlo standard error it was judged against. The
//! [`CorruptedModel`] wrapper exists so each check can be shown to fail.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{BoundKind, Family, MomentBound, PredictiveModel};
use crate::regression::{dot, DesignMatrix, RegressionFamily, RegressionModel};
use crate::resampler::{run_chain, tail_covariance, ChainState, Temper};
use crate::rng::{stream, Purpose};

/// Standard errors allowed before a Monte Carlo check fails.
pub const SE_THRESHOLD: f64 = 4.0;
pub const MIN_MARTINGALE_MC: usize = 10_000;
pub const MIN_BOUND_MC: usize = 100_000;
pub const MIN_VARIANCE_CHAINS: usize = 1000;
pub const VARIANCE_RATIO_TOL: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub theta: Vec<f64>,
    pub statistic: f64,
    pub threshold: f64,
    pub mc_se: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Worst statistic across the grid, in the units of `threshold`.
    pub statistic: f64,
    pub threshold: f64,
    pub mc_se: f64,
    pub points: Vec<PointResult>,
}

impl CheckEntry {
    fn from_points(name: &str, points: Vec<PointResult>) -> Self {
        // Report the point furthest past (or closest to) its threshold.
        let worst = points
            .iter()
            .max_by(|a, b| (a.statistic / a.threshold).total_cmp(&(b.statistic / b.threshold)))
            .cloned();
        let (statistic, threshold, mc_se) =
            worst.map_or((0.0, SE_THRESHOLD, 0.0), |w| (w.statistic, w.threshold, w.mc_se));
        Self {
            name: name.to_string(),
            passed: points.iter().all(|p| p.passed),
            statistic,
            threshold,
            mc_se,
            points,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DiagnosticsReport {
    pub entries: Vec<CheckEntry>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{} {}: statistic={} threshold={} mc_se={} points={}\n",
                if e.passed { "PASS" } else { "FAIL" },
                e.name,
                e.statistic,
                e.threshold,
                e.mc_se,
                e.points.len()
            ));
            for p in &e.points {
                out.push_str(&format!(
                    "    {} theta={:?} statistic={} threshold={}\n",
                    if p.passed { "ok  " } else { "FAIL" },
                    p.theta,
                    p.statistic,
                    p.threshold
                ));
            }
        }
        out
    }
}

/// A model whose natural gradient is `scale·Z + offset`. Negative control for
/// the checks in this module.
#[derive(Debug, Clone)]
pub struct CorruptedModel<M> {
    pub inner: M,
    pub offset: f64,
    pub scale: f64,
}

impl<M> CorruptedModel<M> {
    pub fn offset(inner: M, offset: f64) -> Self {
        Self { inner, offset, scale: 1.0 }
    }

    pub fn scaled(inner: M, scale: f64) -> Self {
        Self { inner, offset: 0.0, scale }
    }
}

impl<M: PredictiveModel> PredictiveModel for CorruptedModel<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn param_names(&self) -> Vec<String> {
        self.inner.param_names()
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        self.inner.check_domain(theta)
    }

    fn impute_update<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, z: &mut [f64]) -> Result<()> {
        self.inner.impute_update(theta, rng, z)?;
        z.iter_mut().for_each(|v| *v = self.scale * *v + self.offset);
        Ok(())
    }

    fn fisher_inverse(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        self.inner.fisher_inverse(theta)
    }

    fn moment_bound(&self) -> Option<MomentBound> {
        self.inner.moment_bound()
    }
}

/// Five parameter points spanning two orders of magnitude.
pub fn default_grid(family: &Family) -> Vec<Vec<f64>> {
    let scales = [0.1, 0.1f64.sqrt(), 1.0, 10f64.sqrt(), 10.0];
    scales
        .iter()
        .map(|&v| match family {
            Family::NormalMeanVar => vec![v, v],
            Family::MultivariateNormal { dim } => {
                let d = *dim;
                let mut t = vec![v; d];
                t.extend(std::iter::repeat_n(v, d));
                t.extend(crate::models::mvn_offdiag_pairs(d).map(|_| 0.3 * v));
                t
            }
            _ => vec![v],
        })
        .collect()
}

fn check_grid<M: PredictiveModel>(model: &M, grid: &[Vec<f64>]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    grid.iter().try_for_each(|t| model.check_domain(t))
}

/// Draws `mc_n` natural gradients at `theta` and hands each to `f`.
fn for_each_gradient<M: PredictiveModel>(
    model: &M,
    theta: &[f64],
    mc_n: usize,
    seed: u64,
    point: usize,
    mut f: impl FnMut(&[f64]),
) -> Result<()> {
    let mut rng = stream(seed, Purpose::Diagnostics, point as u64, 0);
    let mut z = vec![0.0; model.dim()];
    for _ in 0..mc_n {
        model.impute_update(theta, &mut rng, &mut z)?;
        f(&z);
    }
    Ok(())
}

/// Mean-zero check of `Z(θ, Y)`: at each grid point every component of the
/// Monte Carlo mean must lie within 4 standard errors of zero.
pub fn check_martingale<M: PredictiveModel>(
    model: &M,
    grid: &[Vec<f64>],
    mc_n: usize,
    seed: u64,
) -> Result<CheckEntry> {
    if mc_n < MIN_MARTINGALE_MC {
        return Err(Error::Config(format!("martingale check needs mc_n >= {MIN_MARTINGALE_MC}")));
    }
    check_grid(model, grid)?;
    let p = model.dim();
    let mut points = Vec::with_capacity(grid.len());
    for (g, theta) in grid.iter().enumerate() {
        let mut sum = vec![0.0; p];
        let mut sum_sq = vec![0.0; p];
        for_each_gradient(model, theta, mc_n, seed, g, |z| {
            for j in 0..p {
                sum[j] += z[j];
                sum_sq[j] += z[j] * z[j];
            }
        })?;
        let m = mc_n as f64;
        let mut worst = (0.0f64, 0.0f64);
        for j in 0..p {
            let mean = sum[j] / m;
            let var = (sum_sq[j] - m * mean * mean) / (m - 1.0);
            let se = var.max(0.0).sqrt() / m.sqrt();
            let stat = if se > 0.0 {
                mean.abs() / se
            } else if mean == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if stat >= worst.0 {
                worst = (stat, se);
            }
        }
        points.push(PointResult {
            theta: theta.clone(),
            statistic: worst.0,
            threshold: SE_THRESHOLD,
            mc_se: worst.1,
            passed: worst.0 <= SE_THRESHOLD,
        });
    }
    Ok(CheckEntry::from_points("martingale", points))
}

/// Fourth-moment check against the model's analytic constants.
///
/// Exact constants are tested two-sided (`|mean − bound| ≤ 4 se`), expectation
/// bounds one-sided (`mean ≤ bound + 4 se`), and almost-sure bounds on every
/// draw with no Monte Carlo slack. Statistics are in standard errors for the
/// first two kinds and in units of `‖Z‖⁴` for the last.
pub fn check_moment_bound<M: PredictiveModel>(
    model: &M,
    grid: &[Vec<f64>],
    mc_n: usize,
    seed: u64,
) -> Result<CheckEntry> {
    let bound = model.moment_bound().ok_or_else(|| Error::NoBoundAvailable(model.name().to_string()))?;
    if mc_n < MIN_BOUND_MC {
        return Err(Error::Config(format!("moment-bound check needs mc_n >= {MIN_BOUND_MC}")));
    }
    check_grid(model, grid)?;
    let mut points = Vec::with_capacity(grid.len());
    for (g, theta) in grid.iter().enumerate() {
        let target = bound.at(theta);
        let (mut sum, mut sum_sq, mut max) = (0.0, 0.0, 0.0f64);
        for_each_gradient(model, theta, mc_n, seed, g, |z| {
            let n2: f64 = z.iter().map(|v| v * v).sum();
            let q = n2 * n2;
            sum += q;
            sum_sq += q * q;
            max = max.max(q);
        })?;
        let m = mc_n as f64;
        let mean = sum / m;
        let se = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0).sqrt() / m.sqrt();
        let point = match bound.kind {
            BoundKind::Exact => {
                let stat = (mean - target).abs() / se;
                PointResult { theta: theta.clone(), statistic: stat, threshold: SE_THRESHOLD, mc_se: se, passed: stat <= SE_THRESHOLD }
            }
            BoundKind::Expectation => {
                let stat = (mean - target) / se;
                PointResult { theta: theta.clone(), statistic: stat, threshold: SE_THRESHOLD, mc_se: se, passed: stat <= SE_THRESHOLD }
            }
            BoundKind::AlmostSure => PointResult {
                theta: theta.clone(),
                statistic: max,
                threshold: target,
                mc_se: 0.0,
                passed: max <= target * (1.0 + 1e-12),
            },
        };
        points.push(point);
    }
    Ok(CheckEntry::from_points("moment_bound", points))
}

/// Per-chain conditional-variance bookkeeping from exact runs.
///
/// At checkpoint `c` the predicted remaining variance is
/// `V̂_c = r_c² diag(a I(θ_c)⁻¹ aᵀ)`. The realized tail is
/// `V_c = Σ_{i=c+1}^{L} i⁻² diag(a I(θ_{i−1})⁻¹ aᵀ) + r_L² diag(a I(θ_L)⁻¹ aᵀ)`
/// with `L` the end of the simulated chain.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceTrace {
    pub checkpoints: Vec<usize>,
    pub end: usize,
    pub chains: usize,
    pub dim: usize,
    /// `[checkpoint][chain * dim + j]`.
    pub predicted: Vec<Vec<f64>>,
    pub realized: Vec<Vec<f64>>,
}

/// Checkpoints used by [`track_variance_ratio`] relative to `n`.
pub const VARIANCE_CHECKPOINTS: [usize; 3] = [10, 100, 1000];
/// Chain length past `n` for the realized tail.
pub const VARIANCE_TAIL: usize = 10_000;

fn diag(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|j| m[(j, j)]).collect()
}

/// Runs `chains` exact chains from `θ_n` to `n + tail` and records the
/// predicted and realized tail variances at `n + checkpoints`.
pub fn run_variance_trace<M: PredictiveModel>(
    model: &M,
    theta_n: &[f64],
    n: usize,
    chains: usize,
    temper: &Temper,
    checkpoints: &[usize],
    tail: usize,
    seed: u64,
) -> Result<VarianceTrace> {
    use rayon::prelude::*;
    model.check_domain(theta_n)?;
    temper.validate(model.dim())?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return Err(Error::Config("checkpoints must be increasing and positive".into()));
    }
    if *checkpoints.last().expect("nonempty") > tail {
        return Err(Error::Config("last checkpoint exceeds the chain length".into()));
    }
    let p = model.dim();
    let end = n + tail;
    let per_chain: Vec<Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>> = (0..chains)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Diagnostics, b as u64, 0);
            let mut state = ChainState::new(theta_n.to_vec(), n, true);
            let mut pred = Vec::with_capacity(checkpoints.len());
            let mut acc_at = Vec::with_capacity(checkpoints.len());
            for &c in checkpoints {
                run_chain(&mut state, model, temper, n + c, &mut rng)?;
                pred.push(diag(&tail_covariance(model, &state.theta, n + c, temper)?));
                acc_at.push(state.cond_var.clone().expect("tracked"));
            }
            run_chain(&mut state, model, temper, end, &mut rng)?;
            let acc_end = state.cond_var.clone().expect("tracked");
            let rest = diag(&tail_covariance(model, &state.theta, end, temper)?);
            let realized = acc_at
                .iter()
                .map(|a| (0..p).map(|j| acc_end[j] - a[j] + rest[j]).collect())
                .collect();
            Ok((pred, realized))
        })
        .collect();
    let mut predicted = vec![Vec::with_capacity(chains * p); checkpoints.len()];
    let mut realized = vec![Vec::with_capacity(chains * p); checkpoints.len()];
    for r in per_chain {
        let (pr, re) = r?;
        for k in 0..checkpoints.len() {
            predicted[k].extend_from_slice(&pr[k]);
            realized[k].extend_from_slice(&re[k]);
        }
    }
    Ok(VarianceTrace { checkpoints: checkpoints.iter().map(|c| n + c).collect(), end, chains, dim: p, predicted, realized })
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckpointSummary {
    pub step: usize,
    /// Worst component of `|mean_b(V̂/V) − 1|`.
    pub ratio_bias: f64,
    /// Largest component-wise cross-chain sd of `V̂/V`.
    pub ratio_sd: f64,
    /// Largest component-wise cross-chain sd of `V̂ / mean_b V̂`.
    pub relative_dispersion: f64,
}

pub fn summarize_variance_trace(trace: &VarianceTrace) -> Vec<CheckpointSummary> {
    let (b, p) = (trace.chains, trace.dim);
    (0..trace.checkpoints.len())
        .map(|k| {
            let (mut bias, mut sd, mut disp) = (0.0f64, 0.0f64, 0.0f64);
            for j in 0..p {
                let pred: Vec<f64> = (0..b).map(|i| trace.predicted[k][i * p + j]).collect();
                let ratio: Vec<f64> = (0..b).map(|i| pred[i] / trace.realized[k][i * p + j]).collect();
                let (m, s) = mean_sd(&ratio);
                bias = bias.max((m - 1.0).abs());
                sd = sd.max(s);
                let (pm, ps) = mean_sd(&pred);
                disp = disp.max(if pm > 0.0 { ps / pm } else { 0.0 });
            }
            CheckpointSummary { step: trace.checkpoints[k], ratio_bias: bias, ratio_sd: sd, relative_dispersion: disp }
        })
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Passes when the predicted-to-realized tail variance ratio averages to 1
/// within 5% at the last checkpoint.
pub fn track_variance_ratio(trace: &VarianceTrace) -> Result<CheckEntry> {
    if trace.chains < MIN_VARIANCE_CHAINS {
        return Err(Error::InsufficientChains { needed: MIN_VARIANCE_CHAINS, got: trace.chains });
    }
    let summary = summarize_variance_trace(trace);
    let points = summary
        .iter()
        .map(|s| PointResult {
            theta: vec![s.step as f64],
            statistic: s.ratio_bias,
            threshold: VARIANCE_RATIO_TOL,
            mc_se: s.ratio_sd / (trace.chains as f64).sqrt(),
            passed: true,
        })
        .collect::<Vec<_>>();
    let last = points.last().cloned().expect("at least one checkpoint");
    Ok(CheckEntry {
        name: "variance_ratio".into(),
        passed: last.statistic <= VARIANCE_RATIO_TOL,
        statistic: last.statistic,
        threshold: VARIANCE_RATIO_TOL,
        mc_se: last.mc_se,
        points,
    })
}

/// Accumulated one-step-ahead log score `Σ log p_{θ_{i−1}}(Y_i)` along the
/// one-pass recursion `θ_i = θ_{i−1} + i⁻¹ Z(θ_{i−1}, Y_i)`.
pub fn prequential_family(family: &Family, data: &[f64], theta0: &[f64]) -> Result<f64> {
    let d = family.obs_dim();
    if data.is_empty() {
        return Err(Error::InsufficientData("prequential score needs data".into()));
    }
    if !data.len().is_multiple_of(d) {
        return Err(Error::Data(format!("{} values do not form {d}-dimensional observations", data.len())));
    }
    family.validate(theta0)?;
    let mut theta = theta0.to_vec();
    let mut score = 0.0;
    for (i, y) in data.chunks_exact(d).enumerate() {
        score += family.log_density(&theta, y)?;
        let z = family.natural_gradient(&theta, y)?;
        let rate = 1.0 / (i + 1) as f64;
        theta.iter_mut().zip(&z).for_each(|(t, zj)| *t += rate * zj);
        family.validate(&theta)?;
    }
    Ok(score)
}

/// Regression counterpart of [`prequential_family`], visiting the rows in
/// order. The step size is `(i + offset)⁻¹`: starting the rate below one
/// keeps the scale parameter positive through the early steps, where a rate
/// of one would overwrite it with a single squared residual.
pub fn prequential_regression(
    model: &RegressionModel,
    y: &[f64],
    theta0: &[f64],
    offset: usize,
) -> Result<f64> {
    let design = model.design();
    if y.is_empty() {
        return Err(Error::InsufficientData("prequential score needs data".into()));
    }
    if y.len() != design.n() {
        return Err(Error::Data(format!("{} responses for {} design rows", y.len(), design.n())));
    }
    model.check_domain(theta0)?;
    let mut theta = theta0.to_vec();
    let mut score = 0.0;
    for (i, (x, yi)) in design.rows().zip(y).enumerate() {
        score += model.log_density(&theta, *yi, x)?;
        let z = model.natural_gradient(&theta, *yi, x)?;
        let rate = 1.0 / (i + 1 + offset) as f64;
        theta.iter_mut().zip(&z).for_each(|(t, zj)| *t += rate * zj);
        model.check_domain(&theta)?;
    }
    Ok(score)
}

/// Default starting point for regression prequential scores: OLS
/// coefficients with the residual variance as scale.
pub fn regression_start(family: &RegressionFamily, design: &DesignMatrix, y: &[f64]) -> Vec<f64> {
    let p = design.p();
    let mut xty = nalgebra::DVector::zeros(p);
    for (x, yi) in design.rows().zip(y) {
        for j in 0..p {
            xty[j] += x[j] * yi;
        }
    }
    xty /= design.n() as f64;
    let beta: Vec<f64> = (design.sigma_nx_inv() * xty).iter().copied().collect();
    if !family.has_scale() {
        return vec![0.0; p];
    }
    let rv = design.rows().zip(y).map(|(x, yi)| (yi - dot(&beta, x)).powi(2)).sum::<f64>() / y.len() as f64;
    let mut t = beta;
    t.push(rv.max(f64::MIN_POSITIVE));
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct PrequentialRow {
    pub value: f64,
    pub loglik: f64,
}

/// Scores each hyperparameter value with `score` and returns the table in
/// grid order.
pub fn prequential_grid(grid: &[f64], mut score: impl FnMut(f64) -> Result<f64>) -> Result<Vec<PrequentialRow>> {
    grid.iter().map(|&v| Ok(PrequentialRow { value: v, loglik: score(v)? })).collect()
}

/// Grid value with the highest score. Ties go to the first.
pub fn prequential_argmax(rows: &[PrequentialRow]) -> Option<f64> {
    rows.iter().fold(None::<&PrequentialRow>, |best, r| match best {
        Some(b) if b.loglik >= r.loglik => Some(b),
        _ => Some(r),
    })
    .map(|r| r.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn martingale_passes_and_negative_control_fails() {
        let e = Family::exponential();
        assert!(check_martingale(&e, &[vec![1.0]], 100_000, 1).unwrap().passed);
        let t = Family::student_t(5.0).unwrap();
        assert!(check_martingale(&t, &[vec![3.0]], 100_000, 1).unwrap().passed);
        let bad = CorruptedModel::offset(Family::exponential(), 0.1);
        assert!(!check_martingale(&bad, &[vec![1.0]], 100_000, 1).unwrap().passed);
        assert!(check_martingale(&e, &[vec![1.0]], 10, 1).is_err());
    }

    #[test]
    fn moment_bound_examples() {
        let r = check_moment_bound(&Family::exponential(), &[vec![2.0]], 100_000, 2).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_moment_bound(&Family::normal_variance_only(), &[vec![1.0]], 100_000, 2).unwrap();
        assert!(r.passed, "{r:?}");
        let t = Family::student_t(5.0).unwrap();
        let r = check_moment_bound(&t, &[vec![-4.0], vec![0.0], vec![7.0]], 100_000, 2).unwrap();
        assert!(r.passed);
        assert!((r.threshold - 10.24).abs() < 1e-12);
        assert!(r.statistic <= 10.24);
    }

    #[test]
    fn moment_bound_negative_control() {
        let bad = CorruptedModel::scaled(Family::exponential(), 1.1);
        assert!(!check_moment_bound(&bad, &[vec![1.0]], 100_000, 3).unwrap().passed);
        let bad = CorruptedModel::scaled(Family::student_t(5.0).unwrap(), 1.1);
        assert!(!check_moment_bound(&bad, &[vec![0.0]], 100_000, 3).unwrap().passed);
    }

    #[test]
    fn mvn_has_no_bound() {
        let m = Family::multivariate_normal(2).unwrap();
        let g = default_grid(&m);
        assert!(matches!(check_moment_bound(&m, &g, 100_000, 1), Err(Error::NoBoundAvailable(_))));
    }

    #[test]
    fn default_grids_are_in_domain() {
        for name in crate::models::FAMILY_NAMES {
            let f = Family::from_name(name, Default::default()).unwrap();
            let g = default_grid(&f);
            assert_eq!(g.len(), 5);
            assert!(g.iter().all(|t| f.validate(t).is_ok()), "{name}");
        }
    }

    #[test]
    fn variance_ratio_constant_fisher() {
        let f = Family::normal_known_var(2.0).unwrap();
        let tr = run_variance_trace(&f, &[0.0], 10, 1000, &Temper::default(), &VARIANCE_CHECKPOINTS, 2000, 4)
            .unwrap();
        let entry = track_variance_ratio(&tr).unwrap();
        assert!(entry.passed);
        for s in summarize_variance_trace(&tr) {
            assert!(s.ratio_bias < 1e-12 && s.ratio_sd < 1e-12);
        }
    }

    #[test]
    fn variance_ratio_needs_chains() {
        let f = Family::exponential();
        let tr = run_variance_trace(&f, &[1.0], 10, 10, &Temper::default(), &VARIANCE_CHECKPOINTS, 1000, 4)
            .unwrap();
        assert!(matches!(track_variance_ratio(&tr), Err(Error::InsufficientChains { .. })));
    }

    #[test]
    fn prequential_examples() {
        let v = prequential_family(&Family::exponential(), &[1.0], &[1.0]).unwrap();
        assert!((v + 1.0).abs() < 1e-15);
        let v = prequential_family(&Family::normal_known_var(1.0).unwrap(), &[0.0], &[0.0]).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert!(prequential_family(&Family::exponential(), &[], &[1.0]).is_err());
    }

    #[test]
    fn prequential_argmax_picks_best() {
        let rows = vec![
            PrequentialRow { value: 3.0, loglik: -10.0 },
            PrequentialRow { value: 5.0, loglik: -8.0 },
            PrequentialRow { value: 10.0, loglik: -9.0 },
        ];
        assert_eq!(prequential_argmax(&rows), Some(5.0));
        assert_eq!(prequential_argmax(&[]), None);
    }

    #[test]
    fn report_text_lists_every_check() {
        let e = Family::exponential();
        let mut rep = DiagnosticsReport::default();
        rep.entries.push(check_martingale(&e, &default_grid(&e), 10_000, 1).unwrap());
        rep.entries.push(check_moment_bound(&e, &default_grid(&e), 100_000, 1).unwrap());
        let text = rep.to_text();
        assert!(text.contains("martingale") && text.contains("moment_bound"));
        assert!(rep.passed());
    }
}
