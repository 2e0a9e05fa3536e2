//! Monte Carlo runs of a protocol, for cross-checking exact enumeration.

use std::collections::BTreeMap;

use super::protocol::Protocol;
use super::transcript::TranscriptDist;
use crate::channels::Point;
use crate::error::Result;
use crate::perturbations::{PerturbedFamily, Signs};
use crate::rng::StreamKey;

/// Transcript counts over `runs` independent executions with inputs from `P_z`.
pub fn simulate_counts(
    proto: &Protocol,
    fam: &PerturbedFamily,
    z: &Signs,
    runs: u64,
    seed: u64,
) -> Result<BTreeMap<Vec<u32>, u64>> {
    let sup = fam.finite_support(z)?;
    let cdf: Vec<f64> = sup
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let key = StreamKey::from_seed(seed);
    let mut counts = BTreeMap::new();
    for r in 0..runs {
        let run_key = key.derive(r);
        let mut prefix = Vec::with_capacity(proto.players());
        for t in 0..proto.players() {
            let u = run_key.uniform(t as u64, 0);
            let idx = cdf.partition_point(|c| *c <= u).min(cdf.len() - 1);
            let ch = proto.channel_at(t, &prefix)?;
            let mut rng = run_key.derive(1).stream(t as u64);
            let y = ch.sample_output(Point::Symbol(&sup.points()[idx]), &mut rng)?;
            prefix.push(y as u32);
        }
        *counts.entry(prefix).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Pearson chi-square p-value of `counts` against `dist`; cells with an
/// expected count below 5 are pooled.
pub fn chi_square_pvalue(counts: &BTreeMap<Vec<u32>, u64>, dist: &TranscriptDist, runs: u64) -> f64 {
    let n = runs as f64;
    let mut stat = 0.0;
    let mut bins = 0usize;
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (y, p) in &dist.table {
        let e = p * n;
        let o = counts.get(y).copied().unwrap_or(0) as f64;
        if e < 5.0 {
            pooled_obs += o;
            pooled_exp += e;
        } else {
            stat += (o - e).powi(2) / e;
            bins += 1;
        }
    }
    // outcomes the table says are impossible
    let stray: u64 = counts.iter().filter(|(y, _)| !dist.table.contains_key(*y)).map(|(_, c)| c).sum();
    if stray > 0 {
        return 0.0;
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    if bins < 2 {
        return 1.0;
    }
    let df = (bins - 1) as f64;
    statrs::function::gamma::gamma_ur(df / 2.0, stat / 2.0)
}
