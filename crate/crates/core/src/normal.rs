//! Standard normal distribution helpers.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// CDF of N(0, 1).
///
/// Computed through `erfc` so the lower tail keeps full relative precision.
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Density of N(0, 1).
pub fn pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}
