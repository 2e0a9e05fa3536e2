//! Least-squares fit of `log risk` against `log n`.

use serde::{Deserialize, Serialize};

use super::risk::RiskReport;
use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residuals of `ln y` in grid order.
    pub residuals: Vec<f64>,
    pub max_abs_residual: f64,
}

/// Fits `ln y = intercept + slope·ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(invalid(format!("rate fit needs ≥ 3 aligned points, got {} and {}", xs.len(), ys.len())));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("rate fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-12 * (1.0 + mx * mx) {
        return Err(invalid("rate fit needs at least two distinct grid values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = lx.iter().zip(&ly).map(|(x, y)| y - intercept - slope * x).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let max_abs_residual = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(RateFit { slope, intercept, r_squared, residuals, max_abs_residual })
}

/// Exponent of risk in `n` over the report's grid.
pub fn rate_fit(report: &RiskReport) -> Result<RateFit> {
    let xs: Vec<f64> = report.points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = report.points.iter().map(|p| p.risk).collect();
    fit_loglog(&xs, &ys)
}
