//! Fixed-design regression families.
//!
//! Imputation draws a covariate row uniformly from the observed design, then a
//! response from `p_θ(y | x)`. The preconditioner is the empirical Fisher
//! `Î_n(θ) = n⁻¹ Σ_i I(θ; X_i)`. For the normal and Student-t linear models it
//! depends on θ only through a scalar, so their updates are closed forms in
//! `Σ_{n,x}⁻¹`. The truncated logistic model recomputes `Î_{n,κ}(θ)` every
//! step.
//!
//! θ is `(β_1..β_p, σ²)` for the normal model, `(β_1..β_p, τ²)` for the
//! Student-t model and `β` for the logistic model.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, norm_sq, spd_inverse};
use crate::models::{student_t_log_density, BoundKind, MomentBound, PredictiveModel};

pub const DEFAULT_KAPPA: f64 = 1e-3;

pub const REGRESSION_NAMES: [&str; 3] = ["linear_normal", "robust_t", "logistic"];

/// Observed covariates with the cached second-moment matrix
/// `Σ_{n,x} = n⁻¹ Σ X_i X_iᵀ`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    data: Vec<f64>,
    n: usize,
    p: usize,
    names: Vec<String>,
    sigma_nx: DMatrix<f64>,
    sigma_nx_inv: DMatrix<f64>,
    min_eig: f64,
    k_max: f64,
}

impl DesignMatrix {
    /// Builds a design from rows. `names` label the columns.
    pub fn new(rows: &[Vec<f64>], names: Vec<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDesign);
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::Data("design has no columns".into()));
        }
        if names.len() != p {
            return Err(Error::Data(format!("{} column names for {p} columns", names.len())));
        }
        let mut data = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Data(format!("row {i} has {} columns, expected {p}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("row {i} has a non-finite covariate")));
            }
            data.extend_from_slice(r);
        }
        let mut sigma_nx = DMatrix::zeros(p, p);
        let mut k_max: f64 = 0.0;
        for r in data.chunks_exact(p) {
            let x = DVector::from_column_slice(r);
            sigma_nx += &x * x.transpose();
            k_max = k_max.max(norm_sq(r));
        }
        sigma_nx /= n as f64;
        let min_eig = min_eigenvalue(&sigma_nx);
        if !(min_eig > 0.0) {
            return Err(Error::SingularDesign { min_eig });
        }
        let sigma_nx_inv =
            spd_inverse(&sigma_nx).map_err(|_| Error::SingularDesign { min_eig })?;
        Ok(Self { data, n, p, names, sigma_nx, sigma_nx_inv, min_eig, k_max })
    }

    /// Like [`DesignMatrix::new`] with an optional leading all-ones column
    /// named `intercept`.
    pub fn with_intercept(rows: &[Vec<f64>], names: Vec<String>, intercept: bool) -> Result<Self> {
        if !intercept {
            return Self::new(rows, names);
        }
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
            .collect();
        let names = std::iter::once("intercept".to_string()).chain(names).collect();
        Self::new(&rows, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.p)
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn sigma_nx(&self) -> &DMatrix<f64> {
        &self.sigma_nx
    }

    pub fn sigma_nx_inv(&self) -> &DMatrix<f64> {
        &self.sigma_nx_inv
    }

    pub fn min_eig(&self) -> f64 {
        self.min_eig
    }

    /// `max_i ‖X_i‖²`.
    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    /// `Σ_{n,x}⁻¹ x`.
    pub fn precondition(&self, x: &[f64], out: &mut [f64]) {
        let p = self.p;
        for (j, o) in out.iter_mut().enumerate().take(p) {
            let mut acc = 0.0;
            for (k, xk) in x.iter().enumerate() {
                acc += self.sigma_nx_inv[(j, k)] * xk;
            }
            *o = acc;
        }
    }
}

/// Uniform draw of a row index in `0..n`.
pub fn resample_covariate_index<R: Rng + ?Sized>(design: &DesignMatrix, rng: &mut R) -> usize {
    rng.random_range(0..design.n())
}

/// Uniform draw of a covariate row.
pub fn resample_covariate<'a, R: Rng + ?Sized>(
    design: &'a DesignMatrix,
    rng: &mut R,
) -> Result<&'a [f64]> {
    if design.n() == 0 {
        return Err(Error::EmptyDesign);
    }
    Ok(design.row(resample_covariate_index(design, rng)))
}

#[derive(Debug, Clone)]
pub enum RegressionFamily {
    NormalLinear,
    RobustTLinear { nu: f64, noise: StudentT<f64> },
    LogisticTruncated { kappa: f64 },
}

impl RegressionFamily {
    pub fn normal_linear() -> Self {
        RegressionFamily::NormalLinear
    }

    pub fn robust_t(nu: f64) -> Result<Self> {
        if !(nu > 1.0 && nu.is_finite()) {
            return Err(Error::Config(format!("robust_t needs nu > 1, got {nu}")));
        }
        let noise = StudentT::new(nu).map_err(|e| Error::Config(e.to_string()))?;
        Ok(RegressionFamily::RobustTLinear { nu, noise })
    }

    pub fn logistic(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::Config(format!("logistic needs kappa > 0, got {kappa}")));
        }
        Ok(RegressionFamily::LogisticTruncated { kappa })
    }

    pub fn from_name(name: &str, nu: f64, kappa: f64) -> Result<Self> {
        match name {
            "linear_normal" => Ok(Self::normal_linear()),
            "robust_t" => Self::robust_t(nu),
            "logistic" => Self::logistic(kappa),
            other => Err(Error::Config(format!(
                "unknown regression model `{other}` (expected one of {})",
                REGRESSION_NAMES.join(", ")
            ))),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            RegressionFamily::NormalLinear => "linear_normal",
            RegressionFamily::RobustTLinear { .. } => "robust_t",
            RegressionFamily::LogisticTruncated { .. } => "logistic",
        }
    }

    pub fn has_scale(&self) -> bool {
        !matches!(self, RegressionFamily::LogisticTruncated { .. })
    }

    /// Full parameter dimension for `p` covariates.
    pub fn param_dim(&self, p: usize) -> usize {
        p + usize::from(self.has_scale())
    }

    pub fn validate(&self, theta: &[f64], p: usize) -> Result<()> {
        if theta.len() != self.param_dim(p) {
            return Err(Error::Domain(format!(
                "{} expects {} parameters, got {}",
                self.family_name(),
                self.param_dim(p),
                theta.len()
            )));
        }
        if let Some(bad) = theta.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter {bad}")));
        }
        if self.has_scale() && theta[p] <= 0.0 {
            return Err(Error::Domain(format!("scale parameter must be positive, got {}", theta[p])));
        }
        Ok(())
    }

    pub fn check_response(&self, y: f64) -> Result<()> {
        if !y.is_finite() {
            return Err(Error::Support(format!("non-finite response {y}")));
        }
        if matches!(self, RegressionFamily::LogisticTruncated { .. }) && y != 0.0 && y != 1.0 {
            return Err(Error::Support(format!("logistic responses must be 0 or 1, got {y}")));
        }
        Ok(())
    }

    /// `∇_θ log p_θ(y | x)`.
    pub fn score(&self, theta: &[f64], y: f64, x: &[f64]) -> Result<Vec<f64>> {
        let p = x.len();
        self.validate(theta, p)?;
        self.check_response(y)?;
        let eta = dot(&theta[..p], x);
        Ok(match self {
            RegressionFamily::NormalLinear => {
                let s2 = theta[p];
                let e = y - eta;
                let mut s: Vec<f64> = x.iter().map(|xj| e * xj / s2).collect();
                s.push(-0.5 / s2 + e * e / (2.0 * s2 * s2));
                s
            }
            RegressionFamily::RobustTLinear { nu, .. } => {
                let t2 = theta[p];
                let e = y - eta;
                let denom = nu * t2 + e * e;
                let mut s: Vec<f64> = x.iter().map(|xj| (nu + 1.0) * e * xj / denom).collect();
                s.push(nu * (e * e - t2) / (2.0 * t2 * denom));
                s
            }
            RegressionFamily::LogisticTruncated { .. } => {
                let r = y - sigmoid(eta);
                x.iter().map(|xj| r * xj).collect()
            }
        })
    }

    pub fn simulate_response<R: Rng + ?Sized>(&self, theta: &[f64], x: &[f64], rng: &mut R) -> Result<f64> {
        let p = x.len();
        self.validate(theta, p)?;
        Ok(self.simulate_response_unchecked(theta, x, rng))
    }

    #[inline]
    fn simulate_response_unchecked<R: Rng + ?Sized>(&self, theta: &[f64], x: &[f64], rng: &mut R) -> f64 {
        let p = x.len();
        let eta = dot(&theta[..p], x);
        match self {
            RegressionFamily::NormalLinear => {
                let e: f64 = StandardNormal.sample(rng);
                eta + theta[p].sqrt() * e
            }
            RegressionFamily::RobustTLinear { noise, .. } => eta + theta[p].sqrt() * noise.sample(rng),
            RegressionFamily::LogisticTruncated { .. } => {
                let u: f64 = rng.random();
                if u < sigmoid(eta) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn log_density(&self, theta: &[f64], y: f64, x: &[f64]) -> Result<f64> {
        let p = x.len();
        self.validate(theta, p)?;
        self.check_response(y)?;
        let eta = dot(&theta[..p], x);
        Ok(match self {
            RegressionFamily::NormalLinear => {
                let e = y - eta;
                -0.5 * ((2.0 * std::f64::consts::PI).ln() + theta[p].ln()) - e * e / (2.0 * theta[p])
            }
            RegressionFamily::RobustTLinear { nu, .. } => student_t_log_density(*nu, y - eta, theta[p].sqrt()),
            RegressionFamily::LogisticTruncated { .. } => {
                // log σ(η) = −log(1 + e^{−η})
                if y == 1.0 {
                    -softplus(-eta)
                } else {
                    -softplus(eta)
                }
            }
        })
    }
}

/// `Î_n(θ)` with its inverse, evaluated at `theta`.
#[derive(Debug, Clone)]
pub struct EmpiricalFisher {
    pub matrix: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub theta: Vec<f64>,
}

/// A regression family bound to its fixed design.
#[derive(Debug, Clone)]
pub struct RegressionModel {
    family: RegressionFamily,
    design: DesignMatrix,
}

impl RegressionModel {
    pub fn new(family: RegressionFamily, design: DesignMatrix) -> Self {
        Self { family, design }
    }

    pub fn family(&self) -> &RegressionFamily {
        &self.family
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn empirical_fisher(&self, theta: &[f64]) -> Result<EmpiricalFisher> {
        let p = self.design.p();
        self.family.validate(theta, p)?;
        let sigma = self.design.sigma_nx();
        let (matrix, inverse) = match &self.family {
            RegressionFamily::NormalLinear => {
                let s2 = theta[p];
                (
                    block_diag(&(sigma / s2), 1.0 / (2.0 * s2 * s2)),
                    block_diag(&(self.design.sigma_nx_inv() * s2), 2.0 * s2 * s2),
                )
            }
            RegressionFamily::RobustTLinear { nu, .. } => {
                let t2 = theta[p];
                let beta_scale = (nu + 1.0) / ((nu + 3.0) * t2);
                let scale_info = nu / (2.0 * (nu + 3.0) * t2 * t2);
                (
                    block_diag(&(sigma * beta_scale), scale_info),
                    block_diag(&(self.design.sigma_nx_inv() / beta_scale), 1.0 / scale_info),
                )
            }
            RegressionFamily::LogisticTruncated { kappa } => {
                let m = truncated_logistic_fisher(&self.design, &theta[..p], *kappa);
                let inv = spd_inverse(&m)?;
                (m, inv)
            }
        };
        Ok(EmpiricalFisher { matrix, inverse, theta: theta.to_vec() })
    }

    /// Closed-form natural gradient at `(y, x)`.
    pub fn natural_gradient(&self, theta: &[f64], y: f64, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.design.p();
        if x.len() != p {
            return Err(Error::Support(format!("covariate row has {} entries, expected {p}", x.len())));
        }
        self.family.validate(theta, p)?;
        self.family.check_response(y)?;
        let mut z = vec![0.0; self.family.param_dim(p)];
        self.natural_gradient_into(theta, y, x, &mut z)?;
        Ok(z)
    }

    fn natural_gradient_into(&self, theta: &[f64], y: f64, x: &[f64], z: &mut [f64]) -> Result<()> {
        let p = self.design.p();
        let eta = dot(&theta[..p], x);
        match &self.family {
            RegressionFamily::NormalLinear => {
                let e = y - eta;
                self.design.precondition(x, &mut z[..p]);
                z[..p].iter_mut().for_each(|v| *v *= e);
                z[p] = e * e - theta[p];
            }
            RegressionFamily::RobustTLinear { nu, .. } => {
                let t2 = theta[p];
                let tau = t2.sqrt();
                let r = (y - eta) / tau;
                let denom = nu + r * r;
                let coef = tau * (nu + 3.0) * r / denom;
                self.design.precondition(x, &mut z[..p]);
                z[..p].iter_mut().for_each(|v| *v *= coef);
                z[p] = t2 * (nu + 3.0) * (r * r - 1.0) / denom;
            }
            RegressionFamily::LogisticTruncated { kappa } => {
                let m = truncated_logistic_fisher(&self.design, &theta[..p], *kappa);
                let chol = m.cholesky().ok_or(Error::NotPd { min_eig: 0.0 })?;
                let resid = y - sigmoid(eta);
                let s = DVector::from_iterator(p, x.iter().map(|xj| resid * xj));
                let sol = chol.solve(&s);
                z[..p].copy_from_slice(sol.as_slice());
            }
        }
        Ok(())
    }

    /// `Î⁻¹ s(θ, y; x)` with a supplied empirical Fisher. Cross-check route.
    pub fn natural_gradient_with(&self, fisher: &EmpiricalFisher, y: f64, x: &[f64]) -> Result<Vec<f64>> {
        let s = DVector::from_vec(self.family.score(&fisher.theta, y, x)?);
        Ok((&fisher.inverse * s).iter().copied().collect())
    }

    /// Analytic constants `B, C` for `‖Z‖⁴ ≤ B + C‖θ‖⁴` on this design.
    pub fn fourth_moment_bound(&self) -> Option<MomentBound> {
        let k = self.design.k_max();
        let delta = self.design.min_eig();
        match &self.family {
            RegressionFamily::NormalLinear => None,
            RegressionFamily::RobustTLinear { nu, .. } => {
                // ‖Z‖⁴ ≤ (ν+3)⁴ τ⁴ {g²/(16ν²) + τ⁴ + τ² g/(2ν)}, g = K/δ²,
                // then τ⁴, τ⁶ ≤ 1 + τ⁸ and τ⁸ ≤ ‖θ‖⁴.
                let g = k / (delta * delta);
                let a = g * g / (16.0 * nu * nu) + g / (2.0 * nu);
                let scale = (nu + 3.0).powi(4);
                Some(MomentBound::new(scale * a, scale * (1.0 + a), BoundKind::AlmostSure))
            }
            RegressionFamily::LogisticTruncated { kappa } => {
                // ‖Z‖ ≤ √K / (κδ)
                let r = k.sqrt() / (kappa * delta);
                Some(MomentBound::new(r.powi(4), 0.0, BoundKind::AlmostSure))
            }
        }
    }

    pub fn log_density(&self, theta: &[f64], y: f64, x: &[f64]) -> Result<f64> {
        self.family.log_density(theta, y, x)
    }
}

impl PredictiveModel for RegressionModel {
    fn name(&self) -> &str {
        self.family.family_name()
    }

    fn dim(&self) -> usize {
        self.family.param_dim(self.design.p())
    }

    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> =
            self.design.column_names().iter().map(|c| format!("beta_{c}")).collect();
        match self.family {
            RegressionFamily::NormalLinear => names.push("sigma2".into()),
            RegressionFamily::RobustTLinear { .. } => names.push("tau2".into()),
            RegressionFamily::LogisticTruncated { .. } => {}
        }
        names
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        self.family.validate(theta, self.design.p())
    }

    #[inline]
    fn impute_update<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, z: &mut [f64]) -> Result<()> {
        let x = self.design.row(resample_covariate_index(&self.design, rng));
        let y = self.family.simulate_response_unchecked(theta, x, rng);
        self.natural_gradient_into(theta, y, x, z)
    }

    fn fisher_inverse(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.empirical_fisher(theta)?.inverse)
    }

    fn moment_bound(&self) -> Option<MomentBound> {
        self.fourth_moment_bound()
    }
}

fn truncated_logistic_fisher(design: &DesignMatrix, beta: &[f64], kappa: f64) -> DMatrix<f64> {
    let p = design.p();
    let mut m = DMatrix::zeros(p, p);
    for x in design.rows() {
        let s = sigmoid(dot(beta, x));
        let w = (s * (1.0 - s)).max(kappa);
        for j in 0..p {
            let wxj = w * x[j];
            for k in j..p {
                m[(j, k)] += wxj * x[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            m[(j, k)] = m[(k, j)];
        }
    }
    m / design.n() as f64
}

fn block_diag(top: &DMatrix<f64>, last: f64) -> DMatrix<f64> {
    let p = top.nrows();
    let mut m = DMatrix::zeros(p + 1, p + 1);
    m.view_mut((0, 0), (p, p)).copy_from(top);
    m[(p, p)] = last;
    m
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)`.
#[inline]
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn identity_design(p: usize) -> DesignMatrix {
        // Rows ±√p e_j give Σ_{n,x} = I_p.
        let s = (p as f64).sqrt();
        let mut rows = Vec::new();
        for j in 0..p {
            let mut r = vec![0.0; p];
            r[j] = s;
            rows.push(r.clone());
            r[j] = -s;
            rows.push(r);
        }
        DesignMatrix::new(&rows, (0..p).map(|j| format!("x{j}")).collect()).unwrap()
    }

    #[test]
    fn design_moments() {
        let d = identity_design(2);
        assert!((d.sigma_nx() - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        assert!((d.min_eig() - 1.0).abs() < 1e-12);
        assert!((d.k_max() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_and_empty_designs() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            DesignMatrix::new(&rows, vec!["a".into(), "b".into()]),
            Err(Error::SingularDesign { .. })
        ));
        assert!(matches!(DesignMatrix::new(&[], vec![]), Err(Error::EmptyDesign)));
    }

    #[test]
    fn intercept_is_prepended() {
        let d = DesignMatrix::with_intercept(&[vec![2.0], vec![-1.0]], vec!["x".into()], true).unwrap();
        assert_eq!(d.row(0), &[1.0, 2.0]);
        assert_eq!(d.column_names(), ["intercept", "x"]);
    }

    #[test]
    fn empirical_fisher_examples() {
        let m = RegressionModel::new(RegressionFamily::robust_t(5.0).unwrap(), identity_design(2));
        let f = m.empirical_fisher(&[0.0, 0.0, 1.0]).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.75, 0.75, 0.3125]));
        assert!((f.matrix - expected).abs().max() < 1e-14);

        let single = DesignMatrix::new(&[vec![1.0]], vec!["x".into()]).unwrap();
        let m = RegressionModel::new(RegressionFamily::logistic(0.25).unwrap(), single.clone());
        let f = m.empirical_fisher(&[0.0]).unwrap();
        assert!((f.matrix[(0, 0)] - 0.25).abs() < 1e-15);

        let m = RegressionModel::new(RegressionFamily::normal_linear(), single);
        let f = m.empirical_fisher(&[0.0, 2.0]).unwrap();
        assert!((f.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        assert!((f.matrix[(1, 1)] - 0.125).abs() < 1e-15);
        assert!((&f.matrix * &f.inverse - DMatrix::identity(2, 2)).abs().max() < 1e-14);
    }

    #[test]
    fn natural_gradient_examples() {
        let single = DesignMatrix::new(&[vec![1.0]], vec!["x".into()]).unwrap();
        let m = RegressionModel::new(RegressionFamily::robust_t(5.0).unwrap(), single.clone());
        let z = m.natural_gradient(&[0.0, 1.0], 0.0, &[1.0]).unwrap();
        assert_eq!(z[0], 0.0);
        assert!((z[1] + 1.6).abs() < 1e-15);

        let m = RegressionModel::new(RegressionFamily::normal_linear(), single.clone());
        assert_eq!(m.natural_gradient(&[0.0, 1.0], 2.0, &[1.0]).unwrap(), vec![2.0, 3.0]);

        let m = RegressionModel::new(RegressionFamily::logistic(0.1).unwrap(), single);
        let z = m.natural_gradient(&[0.0], 1.0, &[1.0]).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_forms_match_fisher_composition() {
        let rows = vec![
            vec![1.0, 0.3, -1.2],
            vec![1.0, -0.7, 0.4],
            vec![1.0, 1.5, 0.9],
            vec![1.0, 0.1, -0.3],
            vec![1.0, -1.1, 2.0],
        ];
        let design = DesignMatrix::new(&rows, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let cases = [
            (RegressionFamily::normal_linear(), vec![0.5, -1.0, 0.3, 1.7]),
            (RegressionFamily::robust_t(4.0).unwrap(), vec![0.5, -1.0, 0.3, 0.6]),
            (RegressionFamily::logistic(0.05).unwrap(), vec![0.5, -1.0, 3.0]),
        ];
        for (fam, theta) in cases {
            let model = RegressionModel::new(fam, design.clone());
            let fisher = model.empirical_fisher(&theta).unwrap();
            for (i, x) in rows.iter().enumerate() {
                let y = if matches!(model.family(), RegressionFamily::LogisticTruncated { .. }) {
                    (i % 2) as f64
                } else {
                    0.3 * i as f64 - 0.8
                };
                let a = model.natural_gradient(&theta, y, x).unwrap();
                let b = model.natural_gradient_with(&fisher, y, x).unwrap();
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() <= 1e-10 * (1.0 + v.abs()), "{a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn resample_covariate_single_row_and_determinism() {
        let single = DesignMatrix::new(&[vec![2.5]], vec!["x".into()]).unwrap();
        let mut rng = stream(3, Purpose::Chain, 0, 0);
        for _ in 0..10 {
            assert_eq!(resample_covariate(&single, &mut rng).unwrap(), &[2.5]);
        }
        let d = identity_design(2);
        let draw = |seed| {
            let mut rng = stream(seed, Purpose::Chain, 0, 0);
            (0..50).map(|_| resample_covariate_index(&d, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }

    #[test]
    fn simulate_response_degenerate_scale() {
        let fam = RegressionFamily::robust_t(5.0).unwrap();
        let mut rng = stream(5, Purpose::Dataset, 0, 0);
        for _ in 0..1000 {
            let y = fam.simulate_response(&[2.0, 1e-12], &[1.0], &mut rng).unwrap();
            assert!((y - 2.0).abs() < 1e-4);
        }
    }

    #[test]
    fn log_density_logistic_matches_direct() {
        let fam = RegressionFamily::logistic(0.01).unwrap();
        let theta = [0.7, -0.2];
        let x = [1.0, 2.0];
        let eta: f64 = 0.7 - 0.4;
        let p1 = 1.0 / (1.0 + (-eta).exp());
        assert!((fam.log_density(&theta, 1.0, &x).unwrap() - p1.ln()).abs() < 1e-14);
        assert!((fam.log_density(&theta, 0.0, &x).unwrap() - (1.0 - p1).ln()).abs() < 1e-14);
        assert!(fam.log_density(&theta, 0.5, &x).is_err());
    }

    #[test]
    fn scale_domain_enforced() {
        let single = DesignMatrix::new(&[vec![1.0]], vec!["x".into()]).unwrap();
        let m = RegressionModel::new(RegressionFamily::normal_linear(), single);
        assert!(matches!(m.natural_gradient(&[0.0, 0.0], 1.0, &[1.0]), Err(Error::Domain(_))));
    }
}
