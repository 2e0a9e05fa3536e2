//! Exact central moments of a binomial count against `(m·p/2)^{p/2}`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest trial count whose binomial coefficients are exact in `u64`.
pub const MAX_TRIALS: u32 = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialMomentEntry {
    pub m: u32,
    pub q: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialMomentRecord {
    pub entries: Vec<BinomialMomentEntry>,
    /// Largest `lhs − rhs` seen.
    pub max_slack: f64,
    pub pass: bool,
}

/// `E|N − mq|^p` for `N ∼ Bin(m, q)` by exact summation.
pub fn binomial_central_moment(m: u32, q: f64, p: f64) -> Result<f64> {
    if m > MAX_TRIALS {
        return Err(Error::Budget { what: "binomial trials", needed: u128::from(m), limit: u128::from(MAX_TRIALS) });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("success probability must lie in [0, 1], got {q}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!("moment order must be finite and ≥ 1, got {p}")));
    }
    let mean = f64::from(m) * q;
    let mut coef: u64 = 1;
    let mut total = 0.0;
    for k in 0..=m {
        let pmf = coef as f64 * q.powi(k as i32) * (1.0 - q).powi((m - k) as i32);
        total += pmf * (f64::from(k) - mean).abs().powf(p);
        // C(m, k+1) = C(m, k)·(m−k)/(k+1), exact since the product is divisible
        coef = coef * u64::from(m - k) / u64::from(k + 1);
    }
    Ok(total)
}

/// Checks `E|N − mq|^p ≤ 2^{−p/2} m^{p/2} p^{p/2}` for every `1 ≤ m ≤ max_m`
/// and every grid point.
pub fn binomial_moment_check(max_m: u32, qs: &[f64], ps: &[f64]) -> Result<BinomialMomentRecord> {
    if qs.is_empty() || ps.is_empty() {
        return Err(invalid("probability and exponent grids must be nonempty"));
    }
    let mut entries = Vec::new();
    for m in 1..=max_m {
        for &q in qs {
            for &p in ps {
                let lhs = binomial_central_moment(m, q, p)?;
                let rhs = (f64::from(m) * p / 2.0).powf(p / 2.0);
                entries.push(BinomialMomentEntry { m, q, p, lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) });
            }
        }
    }
    let max_slack = entries.iter().map(|e| e.lhs - e.rhs).fold(f64::NEG_INFINITY, f64::max);
    let pass = entries.iter().all(|e| e.pass);
    Ok(BinomialMomentRecord { entries, max_slack, pass })
}
