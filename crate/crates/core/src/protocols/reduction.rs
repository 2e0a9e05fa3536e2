//! Gaussian means through their signs: `ν_j = E[sign X_j] = erf(μ_j/√2)`,
//! estimated by a ±1 backend and mapped back with the inverse error function.

use serde::{Deserialize, Serialize};

use super::comm::{alg2_comm_estimate, CommParams};
use super::ldp::{alg1_ldp_estimate, LdpParams};
use super::pruning::Estimate;
use super::source::{SampleSource, SignReduced};
use crate::error::Result;
use crate::rng::StreamKey;
use crate::special::{erf_inv, eta};

/// Estimator for ±1 samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    Ldp { epsilon: f64 },
    Comm { bits: usize },
}

impl Backend {
    /// Runs the backend on the signs of `src`.
    pub fn run(&self, n: u64, d: usize, s: usize, src: &dyn SampleSource, coins: &StreamKey) -> Result<Estimate> {
        match *self {
            Backend::Ldp { epsilon } => alg1_ldp_estimate(&LdpParams { n, d, s, epsilon }, src, coins),
            Backend::Comm { bits } => alg2_comm_estimate(&CommParams { n, d, s, bits }, src),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedEstimate {
    pub mu_hat: Vec<f64>,
    /// Backend estimate of the sign means, after clamping to `[−η, η]`.
    pub nu_hat: Vec<f64>,
    pub backend: Estimate,
}

/// `erf(μ_j/√2)`, the mean of `sign(X_j)` for `X_j ∼ N(μ_j, 1)`.
pub fn sign_mean(mu: &[f64]) -> Vec<f64> {
    mu.iter().map(|m| libm::erf(m / std::f64::consts::SQRT_2)).collect()
}

/// Clamps to `[−η, η]` and inverts [`sign_mean`].
pub fn invert_sign_mean(nu_hat: &[f64]) -> Result<Vec<f64>> {
    let e = eta();
    nu_hat
        .iter()
        .map(|v| Ok(std::f64::consts::SQRT_2 * erf_inv(v.clamp(-e, e))?))
        .collect()
}

/// Runs `backend` on the signs of Gaussian samples and maps the result back
/// to the Gaussian mean scale.
pub fn gaussian_reduce_estimate(
    n: u64,
    d: usize,
    s: usize,
    backend: Backend,
    src: &dyn SampleSource,
    coins: &StreamKey,
) -> Result<ReducedEstimate> {
    let signs = SignReduced(src);
    let est = backend.run(n, d, s, &signs, coins)?;
    let e = eta();
    let nu_hat: Vec<f64> = est.mu_hat.iter().map(|v| v.clamp(-e, e)).collect();
    Ok(ReducedEstimate { mu_hat: invert_sign_mean(&nu_hat)?, nu_hat, backend: est })
}
