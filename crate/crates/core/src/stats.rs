//! Summaries of posterior draws and the frequentist coverage harness.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format_float;
use crate::estimators::{estimate_moments, estimate_sgd_onepass, EstimatorMethod};
use crate::models::{Family, PredictiveModel};
use crate::resampler::{batch_sample, PosteriorDraws, ResampleConfig, SamplerMode, Temper};
use crate::rng::{derive_seed, stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl CredibleInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn sorted_finite(draws: &[f64]) -> Result<Vec<f64>> {
    if draws.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("draws contain non-finite values".into()));
    }
    let mut v = draws.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Linear-interpolation quantile of sorted data (`h = (B − 1) q`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed interval between the `(1 − level)/2` and `1 − (1 − level)/2`
/// empirical quantiles.
pub fn credible_interval(draws: &[f64], level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("level must lie in (0, 1), got {level}")));
    }
    if draws.len() < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: draws.len() });
    }
    let s = sorted_finite(draws)?;
    let alpha = (1.0 - level) / 2.0;
    Ok(CredibleInterval { lower: quantile_sorted(&s, alpha), upper: quantile_sorted(&s, 1.0 - alpha), level })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, sample sd (divisor `B − 1`), moment skewness, range.
pub fn summarize(draws: &[f64]) -> Result<Summary> {
    if draws.len() < 2 {
        return Err(Error::InsufficientDraws { needed: 2, got: draws.len() });
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for x in draws {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    let sd = (m2 / (n - 1.0)).sqrt();
    let pop = (m2 / n).sqrt();
    let skewness = if pop > 0.0 { m3 / n / pop.powi(3) } else { 0.0 };
    let min = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let max = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary { mean, sd, skewness, min, max })
}

/// `0.9·min(sd, IQR/1.34)·B^{−1/5}`; falls back to the sd when the IQR is 0.
pub fn silverman_bandwidth(draws: &[f64]) -> Result<f64> {
    if draws.len() < 10 {
        return Err(Error::InsufficientDraws { needed: 10, got: draws.len() });
    }
    let s = sorted_finite(draws)?;
    let sd = summarize(&s)?.sd;
    if !(sd > 0.0) {
        return Err(Error::DegenerateDraws);
    }
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * (s.len() as f64).powf(-0.2))
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Gaussian kernel density estimate at each grid point.
pub fn kde(draws: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(draws)?;
    Ok(kde_with_bandwidth(draws, grid, h))
}

pub fn kde_with_bandwidth(draws: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = INV_SQRT_2PI / (h * draws.len() as f64);
    grid.par_iter()
        .map(|&g| {
            norm * draws
                .iter()
                .map(|x| {
                    let u = (g - x) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
        })
        .collect()
}

/// `points` equally spaced values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

/// Grid over mean ± `width`·sd.
pub fn default_kde_grid(draws: &[f64], points: usize, width: f64) -> Result<Vec<f64>> {
    let s = summarize(draws)?;
    Ok(linspace(s.mean - width * s.sd, s.mean + width * s.sd, points))
}

/// Product-Gaussian KDE on the grid `gx × gy`, row-major in `gx`.
pub fn kde2d(x: &[f64], y: &[f64], gx: &[f64], gy: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::Data("kde2d needs paired draws".into()));
    }
    let hx = silverman_bandwidth(x)?;
    let hy = silverman_bandwidth(y)?;
    let norm = INV_SQRT_2PI * INV_SQRT_2PI / (hx * hy * x.len() as f64);
    let mut out = vec![0.0; gx.len() * gy.len()];
    out.par_chunks_mut(gy.len()).zip(gx.par_iter()).for_each(|(row, &a)| {
        let kx: Vec<f64> = x.iter().map(|xi| (-0.5 * ((a - xi) / hx).powi(2)).exp()).collect();
        for (cell, &b) in row.iter_mut().zip(gy) {
            *cell = norm
                * kx.iter().zip(y).map(|(k, yi)| k * (-0.5 * ((b - yi) / hy).powi(2)).exp()).sum::<f64>();
        }
    });
    Ok(out)
}

/// Density level whose superlevel set carries `mass` of the gridded density.
pub fn hdr_threshold(density: &[f64], mass: f64) -> f64 {
    let mut d: Vec<f64> = density.to_vec();
    d.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = d.iter().sum();
    let mut acc = 0.0;
    for v in &d {
        acc += v;
        if acc >= mass * total {
            return *v;
        }
    }
    d.last().copied().unwrap_or(0.0)
}

/// Kolmogorov–Smirnov distance between two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientDraws { needed: 1, got: 0 });
    }
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One coverage study: simulate data at `theta_star`, estimate, resample,
/// and score the marginal intervals, `repeats` times.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageScenario {
    pub family: String,
    #[serde(skip)]
    pub model: Family,
    pub theta_star: Vec<f64>,
    pub n: usize,
    pub repeats: usize,
    pub draws: usize,
    pub mode: SamplerMode,
    pub trunc_extra: usize,
    pub exact_extra: usize,
    pub level: f64,
    pub temper: Temper,
    pub estimator: EstimatorMethod,
    pub seed: u64,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl CoverageScenario {
    pub fn new(model: Family, theta_star: Vec<f64>, n: usize, repeats: usize, draws: usize, seed: u64) -> Self {
        let p = model.param_dim();
        Self {
            family: model.family_name().to_string(),
            model,
            theta_star,
            n,
            repeats,
            draws,
            mode: SamplerMode::Hybrid,
            trunc_extra: 100 * p,
            exact_extra: crate::resampler::DEFAULT_EXACT_EXTRA,
            level: 0.95,
            temper: Temper::default(),
            estimator: EstimatorMethod::Moments,
            seed,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        self.model.validate(&self.theta_star)?;
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !matches!(self.estimator, EstimatorMethod::Moments | EstimatorMethod::SgdOnepass) {
            return Err(Error::Config("coverage supports the moments and sgd_onepass estimators".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        self.config(0).validate(self.n, self.model.param_dim())
    }

    fn config(&self, seed: u64) -> ResampleConfig {
        ResampleConfig::new(self.mode, self.n, self.model.param_dim(), self.draws, seed)
            .with_trunc_extra(self.n, self.trunc_extra)
            .with_exact_extra(self.n, self.exact_extra)
            .with_temper(self.temper.clone())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageRow {
    pub parameter: String,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_length: f64,
    pub length_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageResult {
    pub rows: Vec<CoverageRow>,
    pub repeats: usize,
    pub failed: usize,
    pub scenario: CoverageScenario,
}

impl CoverageResult {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["parameter", "coverage", "coverage_se", "mean_length", "length_se"])?;
        for r in &self.rows {
            out.write_record([
                r.parameter.clone(),
                format_float(r.coverage),
                format_float(r.coverage_se),
                format_float(r.mean_length),
                format_float(r.length_se),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn row(&self, parameter: &str) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

/// `n` observations from `model` at `theta` on the dataset stream of `seed`.
pub fn simulate_dataset(model: &Family, theta: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = stream(seed, Purpose::Dataset, 0, 0);
    let d = model.obs_dim();
    let mut data = vec![0.0; n * d];
    for y in data.chunks_exact_mut(d) {
        model.simulate_into(theta, &mut rng, y)?;
    }
    Ok(data)
}

/// Estimate and posterior draws of repeat `r`.
pub fn repeat_draws(s: &CoverageScenario, r: usize) -> Result<(Vec<f64>, PosteriorDraws)> {
    let seed = derive_seed(s.seed, Purpose::Repeat, r as u64);
    let data = simulate_dataset(&s.model, &s.theta_star, s.n, seed)?;
    let theta_n = match s.estimator {
        EstimatorMethod::SgdOnepass => estimate_sgd_onepass(&s.model, &data, &s.theta_star)?,
        _ => estimate_moments(&s.model, &data)?,
    };
    let draws = batch_sample(&s.model, &theta_n, s.n, &s.config(seed))?;
    Ok((theta_n, draws))
}

/// Per-parameter `(covered, length)` for one repeat.
fn one_repeat(s: &CoverageScenario, r: usize) -> Result<Vec<(bool, f64)>> {
    let (_, draws) = repeat_draws(s, r)?;
    (0..s.model.dim())
        .map(|j| {
            let ci = credible_interval(&draws.column(j), s.level)?;
            Ok((ci.contains(s.theta_star[j]), ci.length()))
        })
        .collect()
}

/// Fails when more than 1% of repeats error; otherwise aggregates the
/// successful ones.
pub fn coverage_experiment(s: &CoverageScenario) -> Result<CoverageResult> {
    s.validate()?;
    let run = || (0..s.repeats).into_par_iter().map(|r| one_repeat(s, r)).collect::<Vec<_>>();
    let outcomes = match s.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    let mut first = None;
    for o in outcomes {
        match o {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if failed as f64 > 0.01 * s.repeats as f64 || ok.is_empty() {
        return Err(Error::ExperimentFailed { failed, total: s.repeats, first: first.unwrap_or_default() });
    }
    let m = ok.len() as f64;
    let rows = s
        .model
        .param_names()
        .into_iter()
        .enumerate()
        .map(|(j, parameter)| {
            let cov = ok.iter().filter(|v| v[j].0).count() as f64 / m;
            let lengths: Vec<f64> = ok.iter().map(|v| v[j].1).collect();
            let mean_length = lengths.iter().sum::<f64>() / m;
            let var = if ok.len() > 1 {
                lengths.iter().map(|l| (l - mean_length).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                0.0
            };
            CoverageRow {
                parameter,
                coverage: cov,
                coverage_se: (cov * (1.0 - cov) / m).sqrt(),
                mean_length,
                length_se: (var / m).sqrt(),
            }
        })
        .collect();
    Ok(CoverageResult { rows, repeats: s.repeats, failed, scenario: s.clone() })
}
