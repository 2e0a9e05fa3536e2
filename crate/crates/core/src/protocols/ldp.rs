//! Private sparse mean estimation: one randomized-response bit per player,
//! with geometric top-third pruning of candidate coordinates.

use serde::{Deserialize, Serialize};

use super::pruning::{clip_unit, group_size, keep_top, rounds_for, Estimate, Players, RoundLog};
use super::source::{sign, SampleSource};
use crate::channels::{make_rr_channel, rr_bias, Channel, ConstraintSpec, Point};
use crate::error::{invalid, Error, Result};
use crate::rng::StreamKey;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpParams {
    pub n: u64,
    pub d: usize,
    pub s: usize,
    pub epsilon: f64,
}

impl LdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid(format!("privacy level must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.d == 0 || self.s == 0 || self.s > self.d {
            return Err(invalid(format!("need 1 ≤ s ≤ d, got d = {}, s = {}", self.d, self.s)));
        }
        Ok(())
    }

    /// Pruning rounds; 0 in the dense regime `3s ≥ d`.
    pub fn rounds(&self) -> u32 {
        if 3 * self.s >= self.d {
            0
        } else {
            rounds_for(self.d, 3 * self.s)
        }
    }
}

struct Reporter<'a> {
    channel: Channel,
    src: &'a dyn SampleSource,
    coins: &'a StreamKey,
}

impl Reporter<'_> {
    /// Sum of the ±1 messages of players `start..start+size` reporting coordinate `j`.
    fn group_sum(&self, j: usize, start: u64, size: u64) -> Result<i64> {
        let mut sum = 0i64;
        for p in start..start + size {
            let x = sign(self.src.value(p, j)) as i32;
            let y = self.channel.output_for_uniform(Point::Symbol(&[x]), self.coins.uniform(p, 0))?;
            sum += 2 * y as i64 - 1;
        }
        Ok(sum)
    }
}

/// Runs the private estimator on `src` (signs of its coordinates are used),
/// with privacy coins drawn from `coins`.
pub fn alg1_ldp_estimate(params: &LdpParams, src: &dyn SampleSource, coins: &StreamKey) -> Result<Estimate> {
    params.validate()?;
    let LdpParams { n, d, s, epsilon } = *params;
    if src.dim() != d {
        return Err(invalid(format!("source has dimension {}, protocol expects {d}", src.dim())));
    }
    let channel = make_rr_channel(epsilon)?;
    for c in [ConstraintSpec::Ldp { epsilon }, ConstraintSpec::Comm { bits: 1 }] {
        if !channel.satisfies(&c) {
            return Err(Error::Domain(format!("reporting channel violates {c:?}")));
        }
    }
    let rep = Reporter { channel, src, coins };
    let mut players = Players::new(n, src, format!("private estimator (n = {n}, d = {d}, s = {s})"))?;
    let mut survivors: Vec<usize> = (0..d).collect();
    let mut rounds = Vec::new();
    let last = params.rounds();
    for t in 1..=last {
        let size = group_size(n, 1, t, 6 * d as u64);
        let mut start = players.take(t, survivors.len() as u64, size)?;
        let mut sums = Vec::with_capacity(survivors.len());
        for &j in &survivors {
            sums.push(rep.group_sum(j, start, size)?);
            start += size;
        }
        let keep = if t == last { 3 * s } else { survivors.len().div_ceil(3) };
        let kept = keep_top(&survivors, &sums, keep);
        rounds.push(RoundLog {
            round: t,
            survivors: std::mem::replace(&mut survivors, kept.clone()),
            group_size: size,
            groups: sums.len() as u64,
            sums,
            kept,
            message_bits: 1,
        });
    }
    let sizes = players.take_rest(last + 1, survivors.len())?;
    let scale = 2.0 * rr_bias(epsilon) - 1.0;
    let mut raw = vec![0.0; d];
    let mut start = players.used() - sizes.iter().sum::<u64>();
    for (&j, &size) in survivors.iter().zip(&sizes) {
        raw[j] = rep.group_sum(j, start, size)? as f64 / (scale * size as f64);
        start += size;
    }
    Ok(Estimate {
        mu_hat: clip_unit(&raw),
        raw,
        support: survivors,
        rounds,
        final_group_sizes: sizes,
        players_used: players.used(),
    })
}
