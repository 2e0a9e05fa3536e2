//! Player accounting and top-third pruning shared by both estimators.

use serde::{Deserialize, Serialize};

use super::source::SampleSource;
use crate::error::{Error, Result};

/// One pruning round: each surviving index (or block) got a fresh group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub survivors: Vec<usize>,
    pub group_size: u64,
    pub groups: u64,
    /// Message sums aligned with `survivors`.
    pub sums: Vec<i64>,
    pub kept: Vec<usize>,
    pub message_bits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// Estimate clipped to `[−1, 1]`.
    pub mu_hat: Vec<f64>,
    /// Debiased estimate before clipping (zero off the support).
    pub raw: Vec<f64>,
    /// Indices that received a final estimate.
    pub support: Vec<usize>,
    pub rounds: Vec<RoundLog>,
    pub final_group_sizes: Vec<u64>,
    pub players_used: u64,
}

/// Hands out consecutive single-use player ids.
pub(crate) struct Players {
    n: u64,
    next: u64,
    label: String,
}

impl Players {
    pub(crate) fn new(n: u64, src: &dyn SampleSource, label: String) -> Result<Self> {
        if let Some(cap) = src.capacity() {
            if cap < n {
                return Err(Error::Configuration(format!("{label}: source holds {cap} players, protocol needs {n}")));
            }
        }
        Ok(Self { n, next: 0, label })
    }

    pub(crate) fn used(&self) -> u64 {
        self.next
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.n - self.next
    }

    /// Reserves `groups` groups of `size` players, returning the first id.
    pub(crate) fn take(&mut self, round: u32, groups: u64, size: u64) -> Result<u64> {
        let need = groups.checked_mul(size).unwrap_or(u64::MAX);
        if size == 0 || need > self.remaining() {
            return Err(Error::Configuration(format!(
                "{}: round {round} needs {groups} groups of {size} players ({need} total), \
                 but only {} of n = {} remain after {} were used",
                self.label,
                self.remaining(),
                self.n,
                self.next
            )));
        }
        let start = self.next;
        self.next += need;
        Ok(start)
    }

    /// Splits every remaining player over `parts` final groups.
    pub(crate) fn take_rest(&mut self, round: u32, parts: usize) -> Result<Vec<u64>> {
        let rem = self.remaining();
        let sizes = split_even(rem, parts);
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Configuration(format!(
                "{}: final round {round} has {rem} players left for {parts} groups (n = {}, {} used in pruning)",
                self.label, self.n, self.next
            )));
        }
        self.next = self.n;
        Ok(sizes)
    }
}

pub(crate) fn split_even(total: u64, parts: usize) -> Vec<u64> {
    let parts = parts as u64;
    (0..parts).map(|i| total / parts + u64::from(i < total % parts)).collect()
}

/// Largest `T` with `target·3^T ≤ d`.
pub(crate) fn rounds_for(d: usize, target: usize) -> u32 {
    let mut size = target.max(1) as u128;
    let mut t = 0;
    while size * 3 <= d as u128 {
        size *= 3;
        t += 1;
    }
    t
}

/// Group size `⌊n·scale·2^t / denom⌋` without floating point.
pub(crate) fn group_size(n: u64, scale: u64, t: u32, denom: u64) -> u64 {
    let v = (u128::from(n) * u128::from(scale)) << t;
    u64::try_from(v / u128::from(denom)).unwrap_or(u64::MAX)
}

/// Keeps `keep` indices ordered by (|sum| descending, index ascending);
/// the result is sorted by index.
pub(crate) fn keep_top(survivors: &[usize], sums: &[i64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..survivors.len()).collect();
    order.sort_by(|&a, &b| sums[b].unsigned_abs().cmp(&sums[a].unsigned_abs()).then(survivors[a].cmp(&survivors[b])));
    let mut kept: Vec<usize> = order.into_iter().take(keep).map(|i| survivors[i]).collect();
    kept.sort_unstable();
    kept
}

pub(crate) fn clip_unit(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.clamp(-1.0, 1.0)).collect()
}
