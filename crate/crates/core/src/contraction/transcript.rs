//! Exact transcript laws by depth-first enumeration.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::Serialize;

use super::protocol::Protocol;
use crate::channels::{Channel, InputDist};
use crate::error::{Error, Result};
use crate::perturbations::{PerturbedFamily, Signs};

/// Default cap on enumerated transcripts.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Probability table over full message tuples; zero-probability tuples are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TranscriptDist {
    pub table: BTreeMap<Vec<u32>, f64>,
}

impl TranscriptDist {
    pub fn total(&self) -> f64 {
        self.table.values().sum()
    }

    pub fn prob(&self, y: &[u32]) -> f64 {
        self.table.get(y).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Adds `w·other` into `self`.
    pub fn add_scaled(&mut self, other: &Self, w: f64) {
        for (y, p) in &other.table {
            *self.table.entry(y.clone()).or_insert(0.0) += w * p;
        }
    }

    fn union_keys<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = &'a Vec<u32>> {
        self.table
            .keys()
            .chain(other.table.keys().filter(|k| !self.table.contains_key(*k)))
    }
}

/// Half the ℓ1 distance.
pub fn tv(p: &TranscriptDist, q: &TranscriptDist) -> f64 {
    0.5 * p.union_keys(q).map(|y| (p.prob(y) - q.prob(y)).abs()).sum::<f64>()
}

/// `1 − Σ√(pq)`, so that `TV² ≤ 2H² ≤ 2TV`.
pub fn hellinger_sq(p: &TranscriptDist, q: &TranscriptDist) -> f64 {
    let bc: f64 = p.table.iter().map(|(y, a)| (a * q.prob(y)).sqrt()).sum();
    (1.0 - bc).max(0.0)
}

/// `TV² ≤ 2H² ≤ 2TV` up to floating-point slack.
pub fn tv_hellinger_ordered(tv: f64, h2: f64) -> bool {
    tv * tv <= 2.0 * h2 + 1e-12 && 2.0 * h2 <= 2.0 * tv + 1e-12
}

/// Enumerates the transcript law when player `t` draws from `laws[t]`.
pub fn enumerate(proto: &Protocol, laws: &[&InputDist], budget: u64) -> Result<TranscriptDist> {
    if laws.len() != proto.players() {
        return Err(crate::error::invalid("one input law per player is required"));
    }
    let mut cache: HashMap<(usize, usize), (Arc<Channel>, Vec<f64>)> = HashMap::new();
    let mut out = TranscriptDist::default();
    let mut nodes = 0u64;
    let mut stack: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
    let n = proto.players();
    while let Some((prefix, mass)) = stack.pop() {
        let t = prefix.len();
        if t == n {
            out.table.insert(prefix, mass);
            continue;
        }
        let ch = proto.channel_at(t, &prefix)?;
        let key = (Arc::as_ptr(&ch) as usize, laws[t] as *const InputDist as usize);
        let dist = match cache.get(&key) {
            Some((_, d)) => d.clone(),
            None => {
                let d = ch.output_dist(laws[t])?;
                cache.insert(key, (ch.clone(), d.clone()));
                d
            }
        };
        for (y, p) in dist.iter().enumerate().rev() {
            if *p > 0.0 {
                nodes += 1;
                if nodes > budget {
                    return Err(Error::Budget { what: "transcript nodes", needed: u128::from(nodes), limit: u128::from(budget) });
                }
                let mut next = prefix.clone();
                next.push(y as u32);
                stack.push((next, mass * p));
            }
        }
    }
    Ok(out)
}

/// Transcript law when every player draws from `P_z`.
pub fn transcript_dist(proto: &Protocol, fam: &PerturbedFamily, z: &Signs) -> Result<TranscriptDist> {
    let law = fam.input_dist(z)?;
    let laws = vec![&law; proto.players()];
    enumerate(proto, &laws, DEFAULT_BUDGET)
}

/// Transcript laws for every `z`.
pub fn all_transcripts(proto: &Protocol, fam: &PerturbedFamily) -> Result<Vec<(Signs, TranscriptDist)>> {
    Signs::enumerate(fam.k())?
        .map(|z| Ok((z, transcript_dist(proto, fam, &z)?)))
        .collect()
}

/// Conditional mixture `E[p_Z | Z_i = sign]` under independent `P(Z_j = +1) = τ`,
/// from precomputed per-`z` laws.
pub fn mixture_from(laws: &[(Signs, TranscriptDist)], tau: f64, i: usize, sign: i8) -> TranscriptDist {
    let mut out = TranscriptDist::default();
    for (z, p) in laws.iter().filter(|(z, _)| z.get(i) == sign) {
        let ones = z.ones() as i32 - i32::from(sign > 0);
        let rest = z.len() as i32 - 1 - ones;
        let w = tau.powi(ones) * (1.0 - tau).powi(rest);
        out.add_scaled(p, w);
    }
    out
}

pub fn mixture_pm(proto: &Protocol, fam: &PerturbedFamily, tau: f64, i: usize, sign: i8) -> Result<TranscriptDist> {
    if i >= fam.k() {
        return Err(crate::error::invalid(format!("coordinate {i} out of range")));
    }
    let laws = all_transcripts(proto, fam)?;
    Ok(mixture_from(&laws, tau, i, sign))
}

/// `(1/k) Σ_i TV(p_{+i}, p_{−i})`, with the per-coordinate distances.
pub fn avg_discrepancy_from(laws: &[(Signs, TranscriptDist)], tau: f64, k: usize) -> (f64, Vec<f64>) {
    let per: Vec<f64> = (0..k)
        .map(|i| tv(&mixture_from(laws, tau, i, 1), &mixture_from(laws, tau, i, -1)))
        .collect();
    (per.iter().sum::<f64>() / k as f64, per)
}

pub fn avg_discrepancy(proto: &Protocol, fam: &PerturbedFamily, tau: f64) -> Result<f64> {
    let laws = all_transcripts(proto, fam)?;
    Ok(avg_discrepancy_from(&laws, tau, fam.k()).0)
}
