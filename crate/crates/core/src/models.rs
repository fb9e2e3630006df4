//! Parametric predictive families for i.i.d. data.
//!
//! Each family exposes the score, the Fisher information (forward and
//! inverse), the natural gradient `Z = I(θ)^{-1} s(θ, y)` in closed form, a
//! simulator for `p_θ`, and where available the constants of a fourth-moment
//! bound `E‖Z‖⁴ ≤ B + C‖θ‖⁴`.
//!
//! Parameter layouts:
//!
//! | family            | θ                                                    |
//! |-------------------|------------------------------------------------------|
//! | `exponential`     | `(scale)`, the mean                                  |
//! | `normal_mean`     | `(mean)`, variance fixed                             |
//! | `normal_var`      | `(variance)`, mean fixed at 0                        |
//! | `student_t`       | `(location)`, ν fixed, scale 1                       |
//! | `normal_meanvar`  | `(mean, variance)`                                   |
//! | `mvnormal`        | means, then variances, then covariances `s_jk` for `j < k` in row-major order |

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, norm_sq, spd_inverse};

/// How a [`MomentBound`] relates to `E‖Z(θ,Y)‖⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundKind {
    /// `E‖Z‖⁴ = B + C‖θ‖⁴`.
    Exact,
    /// `E‖Z‖⁴ ≤ B + C‖θ‖⁴`.
    Expectation,
    /// `‖Z‖⁴ ≤ B + C‖θ‖⁴` for every observation.
    AlmostSure,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MomentBound {
    pub b: f64,
    pub c: f64,
    pub kind: BoundKind,
}

impl MomentBound {
    pub fn new(b: f64, c: f64, kind: BoundKind) -> Self {
        assert!(b >= 0.0 && c >= 0.0 && b + c > 0.0, "invalid moment bound constants");
        Self { b, c, kind }
    }

    /// `B + C‖θ‖⁴`.
    pub fn at(&self, theta: &[f64]) -> f64 {
        let n2 = norm_sq(theta);
        self.b + self.c * n2 * n2
    }
}

/// Anything predictive resampling can run on: a parameter domain, a way to
/// impute one observation and return its natural gradient, and the inverse
/// Fisher information used by the Gaussian tail correction.
pub trait PredictiveModel: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn param_names(&self) -> Vec<String>;
    fn check_domain(&self, theta: &[f64]) -> Result<()>;

    /// Draws the next imputed observation from `p_θ` and writes its natural
    /// gradient into `z`. `theta` must already be in the domain.
    fn impute_update<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, z: &mut [f64])
        -> Result<()>;

    fn fisher_inverse(&self, theta: &[f64]) -> Result<DMatrix<f64>>;

    fn moment_bound(&self) -> Option<MomentBound> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    ExponentialScale,
    NormalKnownVar { sigma2: f64 },
    NormalVarianceOnly,
    StudentTLocation { nu: f64, noise: StudentT<f64> },
    NormalMeanVar,
    MultivariateNormal { dim: usize },
}

/// Fixed hyperparameters used when a family is built from its name.
#[derive(Debug, Clone, Copy)]
pub struct FamilyOptions {
    pub sigma2: f64,
    pub nu: f64,
    pub dim: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self { sigma2: 1.0, nu: 5.0, dim: 2 }
    }
}

pub const FAMILY_NAMES: [&str; 6] = [
    "exponential",
    "normal_mean",
    "normal_var",
    "student_t",
    "normal_meanvar",
    "mvnormal",
];

impl Family {
    pub fn exponential() -> Self {
        Family::ExponentialScale
    }

    pub fn normal_known_var(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Config(format!("normal_mean needs sigma2 > 0, got {sigma2}")));
        }
        Ok(Family::NormalKnownVar { sigma2 })
    }

    pub fn normal_variance_only() -> Self {
        Family::NormalVarianceOnly
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        if !(nu > 1.0 && nu.is_finite()) {
            return Err(Error::Config(format!("student_t needs nu > 1, got {nu}")));
        }
        let noise = StudentT::new(nu).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Family::StudentTLocation { nu, noise })
    }

    pub fn normal_mean_var() -> Self {
        Family::NormalMeanVar
    }

    pub fn multivariate_normal(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("mvnormal needs dimension >= 1".into()));
        }
        Ok(Family::MultivariateNormal { dim })
    }

    pub fn from_name(name: &str, opts: FamilyOptions) -> Result<Self> {
        match name {
            "exponential" => Ok(Self::exponential()),
            "normal_mean" => Self::normal_known_var(opts.sigma2),
            "normal_var" => Ok(Self::normal_variance_only()),
            "student_t" => Self::student_t(opts.nu),
            "normal_meanvar" => Ok(Self::normal_mean_var()),
            "mvnormal" => Self::multivariate_normal(opts.dim),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected one of {})",
                FAMILY_NAMES.join(", ")
            ))),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Family::ExponentialScale => "exponential",
            Family::NormalKnownVar { .. } => "normal_mean",
            Family::NormalVarianceOnly => "normal_var",
            Family::StudentTLocation { .. } => "student_t",
            Family::NormalMeanVar => "normal_meanvar",
            Family::MultivariateNormal { .. } => "mvnormal",
        }
    }

    /// Length of one observation.
    pub fn obs_dim(&self) -> usize {
        match self {
            Family::MultivariateNormal { dim } => *dim,
            _ => 1,
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            Family::NormalMeanVar => 2,
            Family::MultivariateNormal { dim } => mvn_param_dim(*dim),
            _ => 1,
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            Family::ExponentialScale => vec!["scale".into()],
            Family::NormalKnownVar { .. } => vec!["mean".into()],
            Family::NormalVarianceOnly => vec!["variance".into()],
            Family::StudentTLocation { .. } => vec!["location".into()],
            Family::NormalMeanVar => vec!["mean".into(), "variance".into()],
            Family::MultivariateNormal { dim } => {
                let d = *dim;
                let mut names: Vec<String> = (1..=d).map(|j| format!("mu{j}")).collect();
                names.extend((1..=d).map(|j| format!("s{j}")));
                for (j, k) in mvn_offdiag_pairs(d) {
                    names.push(format!("s{}{}", j + 1, k + 1));
                }
                names
            }
        }
    }

    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::Domain(format!(
                "{} expects {} parameters, got {}",
                self.family_name(),
                self.param_dim(),
                theta.len()
            )));
        }
        if let Some(bad) = theta.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter {bad}")));
        }
        match self {
            Family::ExponentialScale | Family::NormalVarianceOnly if theta[0] <= 0.0 => Err(
                Error::Domain(format!("{} needs a positive parameter, got {}", self.family_name(), theta[0])),
            ),
            Family::NormalMeanVar if theta[1] <= 0.0 => {
                Err(Error::Domain(format!("variance must be positive, got {}", theta[1])))
            }
            Family::MultivariateNormal { dim } => {
                let mut cov = mvn_cov_rowmajor(theta, *dim);
                if cholesky_in_place(&mut cov, *dim) {
                    Ok(())
                } else {
                    Err(Error::Domain("covariance matrix is not positive definite".into()))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn check_support(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.obs_dim() {
            return Err(Error::Support(format!(
                "{} expects observations of length {}, got {}",
                self.family_name(),
                self.obs_dim(),
                y.len()
            )));
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Support(format!("non-finite observation {bad}")));
        }
        if matches!(self, Family::ExponentialScale) && y[0] < 0.0 {
            return Err(Error::Support(format!("exponential observations must be >= 0, got {}", y[0])));
        }
        Ok(())
    }

    /// `∇_θ log p_θ(y)`.
    pub fn score(&self, theta: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.validate(theta)?;
        self.check_support(y)?;
        Ok(match self {
            Family::ExponentialScale => {
                let t = theta[0];
                vec![-1.0 / t + y[0] / (t * t)]
            }
            Family::NormalKnownVar { sigma2 } => vec![(y[0] - theta[0]) / sigma2],
            Family::NormalVarianceOnly => {
                let t = theta[0];
                vec![(y[0] * y[0] - t) / (2.0 * t * t)]
            }
            Family::StudentTLocation { nu, .. } => {
                let r = y[0] - theta[0];
                vec![(nu + 1.0) * r / (nu + r * r)]
            }
            Family::NormalMeanVar => {
                let (mu, s2) = (theta[0], theta[1]);
                let e = y[0] - mu;
                vec![e / s2, -0.5 / s2 + e * e / (2.0 * s2 * s2)]
            }
            Family::MultivariateNormal { dim } => mvn_score(theta, y, *dim)?,
        })
    }

    /// Forward Fisher information `I(θ)`.
    pub fn fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.validate(theta)?;
        Ok(match self {
            Family::ExponentialScale => DMatrix::from_element(1, 1, 1.0 / (theta[0] * theta[0])),
            Family::NormalKnownVar { sigma2 } => DMatrix::from_element(1, 1, 1.0 / sigma2),
            Family::NormalVarianceOnly => {
                DMatrix::from_element(1, 1, 1.0 / (2.0 * theta[0] * theta[0]))
            }
            Family::StudentTLocation { nu, .. } => {
                DMatrix::from_element(1, 1, (nu + 1.0) / (nu + 3.0))
            }
            Family::NormalMeanVar => {
                let s2 = theta[1];
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0 / s2, 0.5 / (s2 * s2)]))
            }
            Family::MultivariateNormal { dim } => mvn_fisher(theta, *dim)?,
        })
    }

    /// `I(θ)^{-1}` in closed form.
    pub fn inverse_fisher(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.validate(theta)?;
        Ok(match self {
            Family::ExponentialScale => DMatrix::from_element(1, 1, theta[0] * theta[0]),
            Family::NormalKnownVar { sigma2 } => DMatrix::from_element(1, 1, *sigma2),
            Family::NormalVarianceOnly => DMatrix::from_element(1, 1, 2.0 * theta[0] * theta[0]),
            Family::StudentTLocation { nu, .. } => {
                DMatrix::from_element(1, 1, (nu + 3.0) / (nu + 1.0))
            }
            Family::NormalMeanVar => {
                let s2 = theta[1];
                DMatrix::from_diagonal(&DVector::from_vec(vec![s2, 2.0 * s2 * s2]))
            }
            Family::MultivariateNormal { dim } => mvn_inverse_fisher(theta, *dim),
        })
    }

    /// Closed-form natural gradient `Z(θ, y)`.
    pub fn natural_gradient(&self, theta: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.validate(theta)?;
        self.check_support(y)?;
        let mut z = vec![0.0; self.param_dim()];
        self.natural_gradient_into(theta, y, &mut z);
        Ok(z)
    }

    /// Closed-form natural gradient without validation.
    pub fn natural_gradient_into(&self, theta: &[f64], y: &[f64], z: &mut [f64]) {
        match self {
            Family::ExponentialScale | Family::NormalKnownVar { .. } => z[0] = y[0] - theta[0],
            Family::NormalVarianceOnly => z[0] = y[0] * y[0] - theta[0],
            Family::StudentTLocation { nu, .. } => z[0] = student_t_gradient(*nu, y[0] - theta[0]),
            Family::NormalMeanVar => {
                let e = y[0] - theta[0];
                z[0] = e;
                z[1] = e * e - theta[1];
            }
            Family::MultivariateNormal { dim } => {
                let d = *dim;
                for j in 0..d {
                    let ej = y[j] - theta[j];
                    z[j] = ej;
                    z[d + j] = ej * ej - theta[d + j];
                }
                for (idx, (j, k)) in mvn_offdiag_pairs(d).enumerate() {
                    let pos = 2 * d + idx;
                    z[pos] = (y[j] - theta[j]) * (y[k] - theta[k]) - theta[pos];
                }
            }
        }
    }

    /// `I(θ)^{-1} s(θ, y)` through the generic route: forward Fisher, linear
    /// solve, score. Only used to cross-check the closed forms.
    pub fn natural_gradient_composed(&self, theta: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let s = DVector::from_vec(self.score(theta, y)?);
        let fisher = self.fisher(theta)?;
        let z = fisher
            .lu()
            .solve(&s)
            .ok_or(Error::NotPd { min_eig: 0.0 })?;
        Ok(z.iter().copied().collect())
    }

    pub fn simulate<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        self.validate(theta)?;
        let mut y = vec![0.0; self.obs_dim()];
        self.simulate_into(theta, rng, &mut y)?;
        Ok(y)
    }

    /// Draws `y ~ p_θ` into `y`. `theta` is assumed valid.
    pub fn simulate_into<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, y: &mut [f64]) -> Result<()> {
        match self {
            Family::ExponentialScale => {
                let e: f64 = Exp1.sample(rng);
                y[0] = theta[0] * e;
            }
            Family::NormalKnownVar { sigma2 } => {
                let e: f64 = StandardNormal.sample(rng);
                y[0] = theta[0] + sigma2.sqrt() * e;
            }
            Family::NormalVarianceOnly => {
                let e: f64 = StandardNormal.sample(rng);
                y[0] = theta[0].sqrt() * e;
            }
            Family::StudentTLocation { noise, .. } => y[0] = theta[0] + noise.sample(rng),
            Family::NormalMeanVar => {
                let e: f64 = StandardNormal.sample(rng);
                y[0] = theta[0] + theta[1].sqrt() * e;
            }
            Family::MultivariateNormal { dim } => {
                let d = *dim;
                let mut l = mvn_cov_rowmajor(theta, d);
                if !cholesky_in_place(&mut l, d) {
                    return Err(Error::Domain("covariance matrix is not positive definite".into()));
                }
                let mut eps = [0.0f64; 16];
                let mut heap;
                let eps: &mut [f64] = if d <= 16 {
                    &mut eps[..d]
                } else {
                    heap = vec![0.0; d];
                    &mut heap
                };
                for e in eps.iter_mut() {
                    *e = StandardNormal.sample(rng);
                }
                for i in 0..d {
                    let mut acc = theta[i];
                    for k in 0..=i {
                        acc += l[i * d + k] * eps[k];
                    }
                    y[i] = acc;
                }
            }
        }
        Ok(())
    }

    pub fn log_density(&self, theta: &[f64], y: &[f64]) -> Result<f64> {
        self.validate(theta)?;
        self.check_support(y)?;
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        Ok(match self {
            Family::ExponentialScale => -theta[0].ln() - y[0] / theta[0],
            Family::NormalKnownVar { sigma2 } => {
                let e = y[0] - theta[0];
                -0.5 * (ln2pi + sigma2.ln()) - e * e / (2.0 * sigma2)
            }
            Family::NormalVarianceOnly => -0.5 * (ln2pi + theta[0].ln()) - y[0] * y[0] / (2.0 * theta[0]),
            Family::StudentTLocation { nu, .. } => student_t_log_density(*nu, y[0] - theta[0], 1.0),
            Family::NormalMeanVar => {
                let e = y[0] - theta[0];
                -0.5 * (ln2pi + theta[1].ln()) - e * e / (2.0 * theta[1])
            }
            Family::MultivariateNormal { dim } => {
                let d = *dim;
                let cov = DMatrix::from_row_slice(d, d, &mvn_cov_rowmajor(theta, d));
                let chol = cov
                    .cholesky()
                    .ok_or_else(|| Error::Domain("covariance matrix is not positive definite".into()))?;
                let e = DVector::from_iterator(d, (0..d).map(|j| y[j] - theta[j]));
                let w = chol.l().solve_lower_triangular(&e).expect("triangular solve");
                let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                -0.5 * (d as f64 * ln2pi + logdet + w.norm_squared())
            }
        })
    }

    /// Constants of the fourth-moment bound, when an analytic one is known.
    pub fn fourth_moment_bound(&self) -> Option<MomentBound> {
        match self {
            Family::ExponentialScale => Some(MomentBound::new(0.0, 9.0, BoundKind::Exact)),
            // Z = Y − θ with Y − θ ~ N(0, σ²): E Z⁴ = 3σ⁴.
            Family::NormalKnownVar { sigma2 } => {
                Some(MomentBound::new(3.0 * sigma2 * sigma2, 0.0, BoundKind::Exact))
            }
            Family::NormalVarianceOnly => Some(MomentBound::new(0.0, 60.0, BoundKind::Exact)),
            Family::StudentTLocation { nu, .. } => Some(MomentBound::new(
                (nu + 3.0).powi(4) / (16.0 * nu * nu),
                0.0,
                BoundKind::AlmostSure,
            )),
            // E‖Z‖⁴ = 3σ⁴ + 20σ⁶ + 60σ⁸ and σ⁴, σ⁶ ≤ 1 + σ⁸, while ‖θ‖⁴ ≥ σ⁸.
            Family::NormalMeanVar => Some(MomentBound::new(23.0, 83.0, BoundKind::Expectation)),
            Family::MultivariateNormal { .. } => None,
        }
    }
}

impl PredictiveModel for Family {
    fn name(&self) -> &str {
        self.family_name()
    }

    fn dim(&self) -> usize {
        self.param_dim()
    }

    fn param_names(&self) -> Vec<String> {
        self.names()
    }

    fn check_domain(&self, theta: &[f64]) -> Result<()> {
        self.validate(theta)
    }

    #[inline]
    fn impute_update<R: Rng + ?Sized>(&self, theta: &[f64], rng: &mut R, z: &mut [f64]) -> Result<()> {
        match self {
            Family::ExponentialScale => {
                let e: f64 = Exp1.sample(rng);
                z[0] = theta[0] * (e - 1.0);
            }
            Family::NormalKnownVar { sigma2 } => {
                let e: f64 = StandardNormal.sample(rng);
                z[0] = sigma2.sqrt() * e;
            }
            Family::NormalVarianceOnly => {
                let e: f64 = StandardNormal.sample(rng);
                z[0] = theta[0] * (e * e - 1.0);
            }
            Family::StudentTLocation { nu, noise } => {
                z[0] = student_t_gradient(*nu, noise.sample(rng));
            }
            Family::NormalMeanVar => {
                let e: f64 = StandardNormal.sample(rng);
                let r = theta[1].sqrt() * e;
                z[0] = r;
                z[1] = r * r - theta[1];
            }
            Family::MultivariateNormal { dim } => {
                let mut y = [0.0f64; 16];
                if *dim <= 16 {
                    self.simulate_into(theta, rng, &mut y[..*dim])?;
                    self.natural_gradient_into(theta, &y[..*dim], z);
                } else {
                    let mut y = vec![0.0; *dim];
                    self.simulate_into(theta, rng, &mut y)?;
                    self.natural_gradient_into(theta, &y, z);
                }
            }
        }
        Ok(())
    }

    fn fisher_inverse(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        self.inverse_fisher(theta)
    }

    fn moment_bound(&self) -> Option<MomentBound> {
        self.fourth_moment_bound()
    }
}

#[inline]
fn student_t_gradient(nu: f64, r: f64) -> f64 {
    (nu + 3.0) * r / (nu + r * r)
}

/// Log density of a location-scale Student-t at standardized residual
/// `resid / scale`.
pub(crate) fn student_t_log_density(nu: f64, resid: f64, scale: f64) -> f64 {
    let r = resid / scale;
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (std::f64::consts::PI * nu).ln()
        - scale.ln()
        - 0.5 * (nu + 1.0) * (r * r / nu).ln_1p()
}

pub fn mvn_param_dim(d: usize) -> usize {
    d + d * (d + 1) / 2
}

/// Off-diagonal covariance pairs `(j, k)`, `j < k`, row-major.
pub fn mvn_offdiag_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |j| ((j + 1)..d).map(move |k| (j, k)))
}

/// Position in θ of covariance entry `(j, k)`.
fn mvn_cov_slot(d: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    if j == k {
        return d + j;
    }
    // pairs before row j: sum_{r<j} (d-1-r)
    let before = j * (2 * d - j - 1) / 2;
    2 * d + before + (k - j - 1)
}

fn mvn_cov_rowmajor(theta: &[f64], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for j in 0..d {
        for k in 0..d {
            m[j * d + k] = theta[mvn_cov_slot(d, j, k)];
        }
    }
    m
}

fn mvn_cov(theta: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, &mvn_cov_rowmajor(theta, d))
}

/// Unique covariance entries `(j, k)`, `j <= k`, in θ order.
fn mvn_cov_entries(d: usize) -> Vec<(usize, usize)> {
    let mut entries: Vec<(usize, usize)> = (0..d).map(|j| (j, j)).collect();
    entries.extend(mvn_offdiag_pairs(d));
    entries
}

fn mvn_score(theta: &[f64], y: &[f64], d: usize) -> Result<Vec<f64>> {
    let cov = mvn_cov(theta, d);
    let prec = spd_inverse(&cov)?;
    let e = DVector::from_iterator(d, (0..d).map(|j| y[j] - theta[j]));
    let pe = &prec * &e;
    // ∂ log p / ∂Σ (as a symmetric-matrix gradient) = ½(Σ⁻¹eeᵀΣ⁻¹ − Σ⁻¹).
    let g = (&pe * pe.transpose() - &prec) * 0.5;
    let mut s: Vec<f64> = pe.iter().copied().collect();
    for (j, k) in mvn_cov_entries(d) {
        s.push(if j == k { g[(j, j)] } else { 2.0 * g[(j, k)] });
    }
    Ok(s)
}

/// Forward MVN Fisher: `Σ⁻¹` for the means and `½ tr(Σ⁻¹ E_a Σ⁻¹ E_b)` for
/// covariance entries, with `E_a` the symmetric indicator of entry `a`.
fn mvn_fisher(theta: &[f64], d: usize) -> Result<DMatrix<f64>> {
    let cov = mvn_cov(theta, d);
    let prec = spd_inverse(&cov)?;
    let p = mvn_param_dim(d);
    let mut fisher = DMatrix::zeros(p, p);
    fisher.view_mut((0, 0), (d, d)).copy_from(&prec);
    let entries = mvn_cov_entries(d);
    let indicator = |(j, k): (usize, usize)| {
        let mut m = DMatrix::zeros(d, d);
        m[(j, k)] = 1.0;
        m[(k, j)] = 1.0;
        m
    };
    let mats: Vec<DMatrix<f64>> = entries.iter().map(|&e| &prec * indicator(e)).collect();
    for a in 0..entries.len() {
        for b in 0..entries.len() {
            fisher[(d + a, d + b)] = 0.5 * (&mats[a] * &mats[b]).trace();
        }
    }
    Ok(fisher)
}

/// Closed-form MVN inverse Fisher: block-diag(Σ, J) with
/// `J_{s_jk, s_lm} = s_jm s_lk + s_jl s_mk`.
fn mvn_inverse_fisher(theta: &[f64], d: usize) -> DMatrix<f64> {
    let cov = mvn_cov(theta, d);
    let p = mvn_param_dim(d);
    let mut inv = DMatrix::zeros(p, p);
    inv.view_mut((0, 0), (d, d)).copy_from(&cov);
    let entries = mvn_cov_entries(d);
    for (a, &(j, k)) in entries.iter().enumerate() {
        for (b, &(l, m)) in entries.iter().enumerate() {
            inv[(d + a, d + b)] = cov[(j, m)] * cov[(l, k)] + cov[(j, l)] * cov[(m, k)];
        }
    }
    inv
}
