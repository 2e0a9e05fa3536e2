//! Inverse error function and the constants of the sign reduction.

use libm::{erf, erfc};

use crate::error::{Error, Result};

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `erf(1/√2)`: the sign-mean of a unit-variance Gaussian with mean 1.
pub fn eta() -> f64 {
    erf(std::f64::consts::FRAC_1_SQRT_2)
}

/// Lipschitz constant of `ν ↦ √2·erf⁻¹(ν)` on `[-η, η]`, equal to `√(eπ/2)`.
pub fn reduction_lipschitz() -> f64 {
    (std::f64::consts::E * std::f64::consts::PI / 2.0).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse of `erf` on `(-1, 1)`, solved by safeguarded Newton iteration.
///
/// Above `|y| = 1/2` the residual is taken in `erfc` form so that the
/// tail keeps full relative precision.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !(y.abs() < 1.0) {
        return Err(Error::Domain(format!("erf_inv needs |y| < 1, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let a = y.abs();
    let tail = a > 0.5;
    // residual is increasing in x
    let residual = |x: f64| if tail { (1.0 - a) - erfc(x) } else { erf(x) - a };
    let (mut lo, mut hi) = (0.0f64, 30.0f64);
    let mut x = initial_guess(a).clamp(lo, hi);
    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            break;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = TWO_OVER_SQRT_PI * (-x * x).exp();
        let mut next = x - r / slope;
        if !(next > lo && next < hi) || slope == 0.0 {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= f64::EPSILON * hi {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x.copysign(y))
}

// Winitzki's closed-form approximation, accurate to a few parts in 1e3.
fn initial_guess(a: f64) -> f64 {
    const K: f64 = 0.147;
    let ln = (1.0 - a * a).ln();
    let b = 2.0 / (std::f64::consts::PI * K) + ln / 2.0;
    ((b * b - ln / K).sqrt() - b).sqrt()
}
