//! Initial estimates `θ_n` from observed data.
//!
//! iid families take observations as a flat row-major slice with
//! `family.obs_dim()` values per observation.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue;
use crate::models::{mvn_offdiag_pairs, Family};
use crate::regression::{dot, sigmoid, softplus, DesignMatrix, RegressionFamily};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    Moments,
    SgdOnepass,
    IrlsT,
    LogisticNewton,
}

impl std::str::FromStr for EstimatorMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moments" => Ok(Self::Moments),
            "sgd_onepass" => Ok(Self::SgdOnepass),
            "irls_t" => Ok(Self::IrlsT),
            "logistic_newton" => Ok(Self::LogisticNewton),
            other => Err(Error::Config(format!(
                "unknown estimator `{other}` (moments, sgd_onepass, irls_t, logistic_newton)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorSpec {
    pub method: EstimatorMethod,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub theta0: Option<Vec<f64>>,
    /// Seeds the restart perturbations.
    pub seed: u64,
}

impl EstimatorSpec {
    pub fn new(method: EstimatorMethod) -> Self {
        Self { method, restarts: 10, tol: 1e-8, max_iter: 200, theta0: None, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn default_family_method(_family: &Family) -> EstimatorMethod {
    EstimatorMethod::Moments
}

pub fn default_regression_method(family: &RegressionFamily) -> EstimatorMethod {
    match family {
        RegressionFamily::NormalLinear => EstimatorMethod::Moments,
        RegressionFamily::RobustTLinear { .. } => EstimatorMethod::IrlsT,
        RegressionFamily::LogisticTruncated { .. } => EstimatorMethod::LogisticNewton,
    }
}

fn split_obs<'a>(family: &Family, data: &'a [f64]) -> Result<std::slice::ChunksExact<'a, f64>> {
    let d = family.obs_dim();
    if !data.len().is_multiple_of(d) {
        return Err(Error::Data(format!("{} values do not form {d}-dimensional observations", data.len())));
    }
    for y in data.chunks_exact(d) {
        family.check_support(y)?;
    }
    Ok(data.chunks_exact(d))
}

fn need(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(Error::InsufficientData(format!("{what} needs at least {min} observations, got {n}")));
    }
    Ok(())
}

/// Sample mean and unbiased covariance of `d`-dimensional rows.
fn mean_cov(rows: std::slice::ChunksExact<'_, f64>, d: usize) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for y in rows.clone() {
        for (m, v) in mean.iter_mut().zip(y) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = DMatrix::zeros(d, d);
    for y in rows {
        for j in 0..d {
            for k in 0..d {
                cov[(j, k)] += (y[j] - mean[j]) * (y[k] - mean[k]);
            }
        }
    }
    cov /= n - 1.0;
    (mean, cov)
}

/// Moment estimates: sample mean for the location and exponential families,
/// mean of `Y²` for the zero-mean variance family, sample mean and unbiased
/// covariance for the normal mean–variance families.
pub fn estimate_moments(family: &Family, data: &[f64]) -> Result<Vec<f64>> {
    let rows = split_obs(family, data)?;
    let n = rows.len();
    match family {
        Family::ExponentialScale | Family::NormalKnownVar { .. } | Family::StudentTLocation { .. } => {
            need(n, 1, family.family_name())?;
            Ok(vec![rows.map(|y| y[0]).sum::<f64>() / n as f64])
        }
        Family::NormalVarianceOnly => {
            need(n, 1, family.family_name())?;
            let v = rows.map(|y| y[0] * y[0]).sum::<f64>() / n as f64;
            if !(v > 0.0) {
                return Err(Error::NonPdCovariance);
            }
            Ok(vec![v])
        }
        Family::NormalMeanVar => {
            need(n, 2, family.family_name())?;
            let (mean, cov) = mean_cov(rows, 1);
            if !(cov[(0, 0)] > 0.0) {
                return Err(Error::NonPdCovariance);
            }
            Ok(vec![mean[0], cov[(0, 0)]])
        }
        Family::MultivariateNormal { dim } => {
            let d = *dim;
            need(n, 2, family.family_name())?;
            let (mean, cov) = mean_cov(rows, d);
            let scale = cov.diagonal().max();
            if !(min_eigenvalue(&cov) > 1e-12 * scale) {
                return Err(Error::NonPdCovariance);
            }
            let mut theta = mean;
            theta.extend((0..d).map(|j| cov[(j, j)]));
            theta.extend(mvn_offdiag_pairs(d).map(|(j, k)| cov[(j, k)]));
            Ok(theta)
        }
    }
}

/// Runs `θ_N = θ_{N-1} + N⁻¹ Z(θ_{N-1}, Y_N)` over the observations in order
/// and returns `θ_n`.
pub fn estimate_sgd_onepass(family: &Family, data: &[f64], theta0: &[f64]) -> Result<Vec<f64>> {
    let rows = split_obs(family, data)?;
    need(rows.len(), 1, "sgd_onepass")?;
    family.validate(theta0)?;
    let mut theta = theta0.to_vec();
    for (i, y) in rows.enumerate() {
        let z = family.natural_gradient(&theta, y)?;
        let rate = 1.0 / (i + 1) as f64;
        for (t, zj) in theta.iter_mut().zip(&z) {
            *t += rate * zj;
        }
        family.validate(&theta)?;
    }
    Ok(theta)
}

fn ols(design: &DesignMatrix, y: &[f64]) -> Vec<f64> {
    let p = design.p();
    let mut xty = DVector::zeros(p);
    for (x, yi) in design.rows().zip(y) {
        for j in 0..p {
            xty[j] += x[j] * yi;
        }
    }
    xty /= design.n() as f64;
    (design.sigma_nx_inv() * xty).iter().copied().collect()
}

/// Least squares `β` with the maximum-likelihood variance `RSS / n`.
pub fn estimate_ols(design: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>> {
    check_responses(design, y)?;
    let mut theta = ols(design, y);
    let rss: f64 = design.rows().zip(y).map(|(x, yi)| (yi - dot(&theta, x)).powi(2)).sum();
    let s2 = rss / y.len() as f64;
    if !(s2 > 0.0) {
        return Err(Error::NonPdCovariance);
    }
    theta.push(s2);
    Ok(theta)
}

fn check_responses(design: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != design.n() {
        return Err(Error::Data(format!("{} responses for {} design rows", y.len(), design.n())));
    }
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite response {bad}")));
    }
    Ok(())
}

/// Student-t regression log-likelihood at `(β, τ²)`.
pub fn t_loglik(design: &DesignMatrix, y: &[f64], nu: f64, beta: &[f64], tau2: f64) -> f64 {
    let tau = tau2.sqrt();
    design
        .rows()
        .zip(y)
        .map(|(x, yi)| crate::models::student_t_log_density(nu, yi - dot(beta, x), tau))
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct IrlsFit {
    /// `(β, τ²)`.
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged_restarts: usize,
    /// Largest drop in log-likelihood between consecutive iterations over
    /// all restarts. Zero up to rounding for a correct EM step.
    pub max_loglik_decrease: f64,
}

struct Restart {
    beta: Vec<f64>,
    tau2: f64,
    loglik: f64,
    iterations: usize,
    converged: bool,
    max_decrease: f64,
}

fn irls_restart(
    design: &DesignMatrix,
    y: &[f64],
    nu: f64,
    spec: &EstimatorSpec,
    mut beta: Vec<f64>,
    mut tau2: f64,
) -> Restart {
    let p = design.p();
    let floor = spec.tol;
    tau2 = tau2.max(floor);
    let mut ll = t_loglik(design, y, nu, &beta, tau2);
    let mut max_decrease: f64 = 0.0;
    for it in 1..=spec.max_iter {
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwy = DVector::zeros(p);
        let mut w = Vec::with_capacity(y.len());
        for (x, yi) in design.rows().zip(y) {
            let e = yi - dot(&beta, x);
            let wi = (nu + 1.0) / (nu + e * e / tau2);
            w.push(wi);
            for j in 0..p {
                xtwy[j] += wi * x[j] * yi;
                for k in j..p {
                    xtwx[(j, k)] += wi * x[j] * x[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                xtwx[(j, k)] = xtwx[(k, j)];
            }
        }
        let Some(chol) = xtwx.cholesky() else {
            return Restart { beta, tau2, loglik: ll, iterations: it, converged: false, max_decrease };
        };
        let new_beta: Vec<f64> = chol.solve(&xtwy).iter().copied().collect();
        let new_tau2 = (design
            .rows()
            .zip(y)
            .zip(&w)
            .map(|((x, yi), wi)| {
                let e = yi - dot(&new_beta, x);
                wi * e * e
            })
            .sum::<f64>()
            / y.len() as f64)
            .max(floor);
        let change = beta
            .iter()
            .zip(&new_beta)
            .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
            .fold((tau2 - new_tau2).abs() / (1.0 + tau2), f64::max);
        let new_ll = t_loglik(design, y, nu, &new_beta, new_tau2);
        if new_tau2 > floor {
            max_decrease = max_decrease.max(ll - new_ll);
        }
        beta = new_beta;
        tau2 = new_tau2;
        ll = new_ll;
        if change < spec.tol {
            return Restart { beta, tau2, loglik: ll, iterations: it, converged: true, max_decrease };
        }
    }
    Restart { beta, tau2, loglik: ll, iterations: spec.max_iter, converged: false, max_decrease }
}

/// Student-t regression by iteratively reweighted least squares (the t-EM
/// scheme) with `spec.restarts` starts. The first start is the OLS fit; the
/// others perturb each OLS coefficient by `0.5·max(|β_j|, 1)` standard normal
/// noise and scale the residual variance by a log-normal factor. The
/// converged fit with the highest log-likelihood wins.
pub fn estimate_irls_t(design: &DesignMatrix, y: &[f64], nu: f64, spec: &EstimatorSpec) -> Result<IrlsFit> {
    spec.validate()?;
    check_responses(design, y)?;
    if !(nu > 1.0) {
        return Err(Error::Config(format!("irls_t needs nu > 1, got {nu}")));
    }
    let beta_ols = ols(design, y);
    let resid_var =
        design.rows().zip(y).map(|(x, yi)| (yi - dot(&beta_ols, x)).powi(2)).sum::<f64>() / y.len() as f64;

    let mut best: Option<Restart> = None;
    let mut converged_restarts = 0;
    let mut max_decrease: f64 = 0.0;
    let mut total_iter = 0;
    for k in 0..spec.restarts {
        let (beta0, tau20) = if k == 0 {
            match &spec.theta0 {
                Some(t) if t.len() == design.p() + 1 => (t[..design.p()].to_vec(), t[design.p()]),
                _ => (beta_ols.clone(), resid_var),
            }
        } else {
            let mut rng = stream(spec.seed, Purpose::Estimator, k as u64, 0);
            let beta = beta_ols
                .iter()
                .map(|b| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    b + 0.5 * b.abs().max(1.0) * e
                })
                .collect();
            let e: f64 = StandardNormal.sample(&mut rng);
            (beta, resid_var * (0.5 * e).exp())
        };
        let r = irls_restart(design, y, nu, spec, beta0, tau20);
        total_iter += r.iterations;
        max_decrease = max_decrease.max(r.max_decrease);
        if !r.converged {
            continue;
        }
        converged_restarts += 1;
        if best.as_ref().is_none_or(|b| r.loglik > b.loglik) {
            best = Some(r);
        }
    }
    let best = best.ok_or(Error::NoConvergence { max_iter: spec.max_iter })?;
    let mut theta = best.beta;
    theta.push(best.tau2);
    Ok(IrlsFit {
        theta,
        loglik: best.loglik,
        iterations: total_iter,
        converged_restarts,
        max_loglik_decrease: max_decrease,
    })
}

/// Logistic log-likelihood.
pub fn logistic_loglik(design: &DesignMatrix, y: &[f64], beta: &[f64]) -> f64 {
    design
        .rows()
        .zip(y)
        .map(|(x, yi)| {
            let eta = dot(beta, x);
            if *yi == 1.0 {
                -softplus(-eta)
            } else {
                -softplus(eta)
            }
        })
        .sum()
}

/// Gradient of the mean logistic log-likelihood.
pub fn logistic_gradient(design: &DesignMatrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; design.p()];
    for (x, yi) in design.rows().zip(y) {
        let r = yi - sigmoid(dot(beta, x));
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
    }
    let n = design.n() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

/// Logistic maximum likelihood by Newton–Raphson from `β = 0`, stopping when
/// the mean-score norm drops below `spec.tol`.
pub fn estimate_logistic_newton(design: &DesignMatrix, y: &[f64], spec: &EstimatorSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    check_responses(design, y)?;
    if let Some(bad) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Data(format!("logistic responses must be 0 or 1, got {bad}")));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::Separation);
    }
    let p = design.p();
    let n = design.n() as f64;
    let mut beta = spec.theta0.clone().filter(|t| t.len() == p).unwrap_or_else(|| vec![0.0; p]);
    for _ in 0..spec.max_iter {
        let g = logistic_gradient(design, y, &beta);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < spec.tol {
            // A vanishing score with every label fitted perfectly is a
            // separated fit drifting to infinity, not a maximum.
            let perfect = design.rows().zip(y).all(|(x, yi)| {
                let s = sigmoid(dot(&beta, x));
                (if *yi == 1.0 { 1.0 - s } else { s }) < 1e-6
            });
            if perfect {
                return Err(Error::Separation);
            }
            return Ok(beta);
        }
        let mut h = DMatrix::zeros(p, p);
        for x in design.rows() {
            let s = sigmoid(dot(&beta, x));
            let w = s * (1.0 - s) / n;
            for j in 0..p {
                for k in 0..p {
                    h[(j, k)] += w * x[j] * x[k];
                }
            }
        }
        let chol = h.cholesky().ok_or(Error::Separation)?;
        let step = chol.solve(&DVector::from_vec(g));
        if !(step.norm() <= 1e6) {
            return Err(Error::Separation);
        }
        for (b, s) in beta.iter_mut().zip(step.iter()) {
            *b += s;
        }
        if !(beta.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e6) {
            return Err(Error::Separation);
        }
    }
    // Quasi-separation drives ‖β‖ upward without bound.
    if beta.iter().map(|v| v * v).sum::<f64>().sqrt() > 50.0 {
        return Err(Error::Separation);
    }
    Err(Error::NoConvergence { max_iter: spec.max_iter })
}
