//! Standard normal distribution helpers.

use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

fn standard() -> &'static Normal {
    static STD: OnceLock<Normal> = OnceLock::new();
    STD.get_or_init(|| Normal::standard())
}

/// Φ(x).
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), computed without cancellation in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// φ(x).
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ⁻¹(p). Returns −∞ for p ≤ 0 and +∞ for p ≥ 1.
pub fn quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let x = standard().inverse_cdf(p);
        // one Newton step on Φ(x) = p sharpens the library's approximation
        let d = pdf(x);
        if d > 0.0 {
            x - (cdf(x) - p) / d
        } else {
            x
        }
    }
}
