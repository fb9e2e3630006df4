use mpost::diagnostics::check_martingale;
use mpost::models::Family;
use mpost::resampler::{batch_sample, run_chain, tail_weight, ChainState, ResampleConfig, SamplerMode, Temper};
use mpost::rng::{stream, Purpose};
use mpost::stats::{credible_interval, summarize};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_gradient_matches_composed(
        scale in 0.2f64..5.0,
        mean in -3.0f64..3.0,
        y in 0.01f64..8.0,
        nu in 2.5f64..40.0,
    ) {
        let cases: Vec<(Family, Vec<f64>, Vec<f64>)> = vec![
            (Family::exponential(), vec![scale], vec![y]),
            (Family::normal_known_var(scale).unwrap(), vec![mean], vec![y]),
            (Family::normal_variance_only(), vec![scale], vec![y - 4.0]),
            (Family::student_t(nu).unwrap(), vec![mean], vec![y]),
            (Family::normal_mean_var(), vec![mean, scale], vec![y]),
        ];
        for (f, theta, obs) in cases {
            let a = f.natural_gradient(&theta, &obs).unwrap();
            let b = f.natural_gradient_composed(&theta, &obs).unwrap();
            prop_assert!(close(&a, &b, 1e-9), "{}: {a:?} vs {b:?}", f.family_name());
        }
    }

    #[test]
    fn mvn_gradient_matches_composed(
        m1 in -2.0f64..2.0, m2 in -2.0f64..2.0,
        v1 in 0.3f64..3.0, v2 in 0.3f64..3.0, rho in -0.9f64..0.9,
        y1 in -4.0f64..4.0, y2 in -4.0f64..4.0,
    ) {
        let f = Family::multivariate_normal(2).unwrap();
        let theta = [m1, m2, v1, v2, rho * (v1 * v2).sqrt()];
        let a = f.natural_gradient(&theta, &[y1, y2]).unwrap();
        let b = f.natural_gradient_composed(&theta, &[y1, y2]).unwrap();
        prop_assert!(close(&a, &b, 1e-8), "{a:?} vs {b:?}");
    }

    #[test]
    fn tail_weight_is_bracketed(n in 1usize..5_000_000) {
        let r = tail_weight(n).r_sq;
        let x = n as f64;
        prop_assert!(r > 1.0 / (x + 1.0) && r < 1.0 / x);
        let step = tail_weight(n + 1).r_sq;
        let d = r - step;
        let expect = 1.0 / ((x + 1.0) * (x + 1.0));
        prop_assert!((d - expect).abs() <= 1e-12 * expect.max(r), "{d} vs {expect}");
    }

    #[test]
    fn credible_intervals_nest(
        draws in proptest::collection::vec(-100.0f64..100.0, 10..300),
        lo in 0.05f64..0.6,
        extra in 0.01f64..0.35,
    ) {
        let narrow = credible_interval(&draws, lo).unwrap();
        let wide = credible_interval(&draws, lo + extra).unwrap();
        prop_assert!(wide.lower <= narrow.lower && narrow.upper <= wide.upper);
        prop_assert!(narrow.lower <= narrow.upper);
    }

    #[test]
    fn mvn_chain_stays_positive_definite(seed in any::<u64>(), rho in -0.99f64..0.99) {
        let f = Family::multivariate_normal(2).unwrap();
        let theta = vec![0.0, 0.0, 1.0, 0.5, rho * 0.5f64.sqrt()];
        let mut state = ChainState::new(theta, 5, false);
        let mut rng = stream(seed, Purpose::Chain, 0, 0);
        prop_assert!(run_chain(&mut state, &f, &Temper::Scalar(1.0), 400, &mut rng).is_ok());
    }
}

#[test]
fn one_step_is_a_martingale() {
    let families = [
        (Family::exponential(), vec![vec![0.5], vec![3.0]]),
        (Family::normal_mean_var(), vec![vec![1.0, 2.0]]),
        (Family::student_t(4.0).unwrap(), vec![vec![-1.0]]),
        (Family::multivariate_normal(2).unwrap(), vec![vec![-0.5, 1.0, 1.0, 0.5, 0.7]]),
    ];
    for (f, grid) in families {
        let r = check_martingale(&f, &grid, 20_000, 99).unwrap();
        assert!(r.passed, "{}: {r:?}", f.family_name());
    }
}

#[test]
fn truncated_variance_follows_tail_weights() {
    // Without the Gaussian tail, exponential draws stopped at N have sd close
    // to θ_n sqrt(r_n² − r_N²).
    let f = Family::exponential();
    let (n, stop) = (500, 2500);
    let cfg = ResampleConfig::new(SamplerMode::Truncated, n, 1, 8000, 3).with_trunc_extra(n, stop - n);
    let d = batch_sample(&f, &[2.0], n, &cfg).unwrap();
    let sd = summarize(&d.column(0)).unwrap().sd;
    let expect = 2.0 * (tail_weight(n).r_sq - tail_weight(stop).r_sq).sqrt();
    assert!((sd / expect - 1.0).abs() < 0.04, "{sd} vs {expect}");
}

#[test]
fn matrix_temper_scales_tail() {
    let f = Family::normal_mean_var();
    let a = nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
    let base = ResampleConfig::new(SamplerMode::Hybrid, 1000, 2, 20_000, 8);
    let plain = batch_sample(&f, &[0.0, 1.0], 1000, &base).unwrap();
    let tempered = batch_sample(&f, &[0.0, 1.0], 1000, &base.with_temper(Temper::Matrix(a))).unwrap();
    let sd = |d: &mpost::resampler::PosteriorDraws, j| summarize(&d.column(j)).unwrap().sd;
    assert!((sd(&tempered, 0) / sd(&plain, 0) - 2.0).abs() < 0.06);
    assert!((sd(&tempered, 1) / sd(&plain, 1) - 1.0).abs() < 0.03);
}
