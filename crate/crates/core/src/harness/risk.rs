//! Monte Carlo risk `E[ℓ_p(θ, θ̂)^p]^{1/p}` with bootstrap standard errors.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EstimatorKind, ExperimentConfig, FamilyKind, LossExponent};
use crate::error::{Error, Result};
use crate::families::{lp_loss, ProductBernoulli, SphericalGaussian};
use crate::protocols::{gaussian_reduce_estimate, LiveBernoulli, LiveGaussian, SampleSource};
use crate::rng::StreamKey;

pub const BOOTSTRAP_REPS: usize = 200;

/// Risk at the surrogate exponent used for `p = ∞`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateRisk {
    pub p: f64,
    pub risk: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub n: u64,
    pub trials: u64,
    pub risk: f64,
    pub stderr: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surrogate: Option<SurrogateRisk>,
    pub elapsed_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub config: ExperimentConfig,
    pub points: Vec<RiskPoint>,
    pub elapsed_secs: f64,
}

impl RiskReport {
    /// The report without wall-clock fields, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.elapsed_secs = 0.0;
        r.points.iter_mut().for_each(|p| p.elapsed_secs = 0.0);
        r
    }
}

/// Key for one trial at one grid point.
pub fn trial_key(cfg: &ExperimentConfig, n: u64, trial: u64) -> StreamKey {
    StreamKey::from_seed(cfg.seed).derive(cfg.id).derive(n).derive(trial)
}

/// One protocol execution: returns the estimate of the mean.
pub fn run_trial(cfg: &ExperimentConfig, mean: &[f64], n: u64, trial: u64) -> Result<Vec<f64>> {
    let key = trial_key(cfg, n, trial);
    let (data, coins) = (key.derive(0), key.derive(1));
    let (d, s) = (cfg.family.d, cfg.family.s);
    let src: Box<dyn SampleSource> = match cfg.family.kind {
        FamilyKind::Bernoulli => Box::new(LiveBernoulli { dist: ProductBernoulli::new(mean.to_vec())?, key: data }),
        FamilyKind::Gaussian => Box::new(LiveGaussian { dist: SphericalGaussian::new(mean.to_vec())?, key: data }),
    };
    match cfg.estimator {
        EstimatorKind::Oracle => Ok(mean.to_vec()),
        EstimatorKind::EmpiricalMean => Ok((0..d).map(|j| (0..n).map(|p| src.value(p, j)).sum::<f64>() / n as f64).collect()),
        EstimatorKind::Protocol => match cfg.family.kind {
            FamilyKind::Bernoulli => Ok(cfg.constraint.run(n, d, s, src.as_ref(), &coins)?.mu_hat),
            FamilyKind::Gaussian => Ok(gaussian_reduce_estimate(n, d, s, cfg.constraint, src.as_ref(), &coins)?.mu_hat),
        },
    }
}

/// `(mean of xs)^{1/p}`, or the plain mean at `p = ∞`.
fn aggregate(xs: &[f64], p: f64) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if p.is_infinite() {
        m
    } else {
        m.powf(1.0 / p)
    }
}

/// Bootstrap standard deviation of [`aggregate`], resampling trials.
pub fn bootstrap_stderr(xs: &[f64], p: f64, reps: usize, key: &StreamKey) -> f64 {
    if xs.len() < 2 || reps < 2 {
        return 0.0;
    }
    let mut rng = key.stream(0);
    let mut buf = vec![0.0; xs.len()];
    let stats: Vec<f64> = (0..reps)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = xs[rng.random_range(0..xs.len())];
            }
            aggregate(&buf, p)
        })
        .collect();
    let m = stats.iter().sum::<f64>() / reps as f64;
    (stats.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps - 1) as f64).sqrt()
}

/// `ℓ_p^p` per trial (`ℓ_∞` at `p = ∞`).
fn trial_loss(theta: &[f64], est: &[f64], p: f64) -> Result<f64> {
    let l = lp_loss(theta, est, p)?;
    Ok(if p.is_infinite() { l } else { l.powf(p) })
}

pub fn monte_carlo_risk(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mean = cfg.family.mean()?;
    let p = cfg.p.0;
    let surrogate_p = cfg.p.is_infinite().then(|| LossExponent::surrogate(cfg.family.s));
    let mut points = Vec::with_capacity(cfg.n.len());
    for &n in &cfg.n {
        let t0 = Instant::now();
        let losses: Vec<(f64, f64)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let est = run_trial(cfg, &mean, n, t).map_err(|e| {
                    let (d, s) = (cfg.family.d, cfg.family.s);
                    match e {
                        Error::Configuration(m) => Error::Configuration(format!("(n, d, s) = ({n}, {d}, {s}): {m}")),
                        other => Error::InvalidParameter(format!("(n, d, s) = ({n}, {d}, {s}): {other}")),
                    }
                })?;
                let main = trial_loss(&mean, &est, p)?;
                let sur = match surrogate_p {
                    Some(q) => trial_loss(&mean, &est, q)?,
                    None => 0.0,
                };
                Ok((main, sur))
            })
            .collect::<Result<_>>()?;
        let boot = StreamKey::from_seed(cfg.seed).derive(cfg.id).derive(n).derive(u64::MAX);
        let main: Vec<f64> = losses.iter().map(|l| l.0).collect();
        let surrogate = surrogate_p.map(|q| {
            let xs: Vec<f64> = losses.iter().map(|l| l.1).collect();
            SurrogateRisk { p: q, risk: aggregate(&xs, q), stderr: bootstrap_stderr(&xs, q, BOOTSTRAP_REPS, &boot.derive(1)) }
        });
        points.push(RiskPoint {
            n,
            trials: cfg.trials,
            risk: aggregate(&main, p),
            stderr: bootstrap_stderr(&main, p, BOOTSTRAP_REPS, &boot),
            surrogate,
            elapsed_secs: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(RiskReport { config: cfg.clone(), points, elapsed_secs: start.elapsed().as_secs_f64() })
}
