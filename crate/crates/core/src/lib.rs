//! Parametric martingale posteriors by predictive resampling.

pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod models;
pub mod regression;
pub mod resampler;
pub mod rng;
pub mod stats;

pub use error::{Error, ErrorCategory, Result};

/// Shortest decimal text that parses back to the same `f64`, switching to
/// exponent notation for very small or very large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::format_float;

    #[test]
    fn format_float_round_trips() {
        for v in [0.0, -0.0, 1.0, 0.1, 1e-5, 9.99e-6, 4.487474755275612e-112, 1e16, 123456.789, -2.5e300] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(4.5e-112), "4.5e-112");
    }
}
