//! Random small instances for certification sweeps.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::protocol::{Protocol, TabulatedRule};
use crate::channels::{table_channel, ConstraintSpec};
use crate::error::{invalid, Result};
use crate::families::sign_vectors;
use crate::perturbations::{Construction, PerturbedFamily};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceOptions {
    pub max_k: usize,
    pub max_n: usize,
    pub min_n: usize,
    pub max_outputs: usize,
    /// Perturbation sizes; the discrete family uses `γ/D` to stay in range.
    pub gammas: Vec<f64>,
    /// Prior biases for the Bernoulli family (the discrete family uses 1/2).
    pub taus: Vec<f64>,
    pub kinds: Vec<Construction>,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            max_k: 3,
            max_n: 5,
            min_n: 1,
            max_outputs: 3,
            gammas: vec![0.05, 0.2, 0.4],
            taus: vec![0.1, 0.25, 0.5],
            kinds: vec![Construction::Bernoulli, Construction::Discrete],
        }
    }
}

/// Enough to rebuild an instance and to report it on failure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub seed: u64,
    pub kind: Construction,
    pub k: usize,
    pub n: usize,
    pub gamma: f64,
    pub tau: f64,
    pub channels: usize,
}

pub struct RandomInstance {
    pub spec: InstanceSpec,
    pub family: PerturbedFamily,
    pub protocol: Protocol,
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, xs: &[T]) -> Result<T> {
    if xs.is_empty() {
        return Err(invalid("empty option list"));
    }
    Ok(xs[rng.random_range(0..xs.len())])
}

/// Family plus a message-dependent protocol whose every channel has a kernel
/// drawn uniformly entrywise and then row-normalised.
pub fn random_instance(seed: u64, opts: &InstanceOptions) -> Result<RandomInstance> {
    if opts.max_k == 0 || opts.min_n == 0 || opts.min_n > opts.max_n || opts.max_outputs < 2 {
        return Err(invalid("instance options out of range"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kind = pick(&mut rng, &opts.kinds)?;
    let k = rng.random_range(1..=opts.max_k);
    let n = rng.random_range(opts.min_n..=opts.max_n);
    let g = pick(&mut rng, &opts.gammas)?;
    let (family, inputs) = match kind {
        Construction::Bernoulli => {
            let tau = pick(&mut rng, &opts.taus)?;
            (PerturbedFamily::bernoulli(k, g, tau)?, sign_vectors(k)?)
        }
        Construction::Discrete => {
            let d = 2 * k;
            (PerturbedFamily::discrete(d, g / d as f64)?, (0..d as i32).map(|s| vec![s]).collect())
        }
        Construction::Gaussian => return Err(invalid("random instances need a finite support")),
    };
    let mut rule = TabulatedRule::default();
    let mut level: Vec<Vec<u32>> = vec![Vec::new()];
    for t in 0..n {
        let mut next = Vec::new();
        for prefix in level {
            let width = rng.random_range(2..=opts.max_outputs);
            let rows = (0..inputs.len())
                .map(|_| {
                    let raw: Vec<f64> = (0..width).map(|_| rng.random::<f64>() + 1e-12).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|v| v / s).collect()
                })
                .collect();
            let ch = table_channel(inputs.clone(), rows, vec![ConstraintSpec::Unconstrained])?;
            for y in 0..width as u32 {
                let mut p = prefix.clone();
                p.push(y);
                next.push(p);
            }
            rule.insert(t, prefix, Arc::new(ch));
        }
        level = next;
    }
    let channels = rule.len();
    let protocol = Protocol::new(Arc::new(rule), vec![ConstraintSpec::Unconstrained; n], seed)?;
    Ok(RandomInstance {
        spec: InstanceSpec { seed, kind, k, n, gamma: family.gamma(), tau: family.tau(), channels },
        family,
        protocol,
    })
}
