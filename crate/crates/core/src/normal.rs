//! Standard normal distribution helpers.

use statrs::function::erf::erf_inv;
use std::f64::consts::SQRT_2;

/// Standard normal CDF, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile `Φ^{-1}(u)` for `u` in (0, 1).
pub fn quantile(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    let x = SQRT_2 * erf_inv(2.0 * u - 1.0);
    // Newton steps on Φ(x) = u, measured on the smaller tail
    let mut x = x;
    for _ in 0..2 {
        let d = pdf(x);
        if !(d > 0.0) {
            break;
        }
        let r = if x > 0.0 {
            (1.0 - u) - sf(x)
        } else {
            cdf(x) - u
        };
        x -= r / d;
    }
    x
}

/// Two-sided critical value `Φ^{-1}(1 - level/2)`.
pub fn two_sided_critical(level: f64) -> f64 {
    // 1 - level/2 computed through the upper tail for small levels
    -quantile(level / 2.0)
}
