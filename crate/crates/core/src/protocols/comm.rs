//! Bit-limited sparse mean estimation: each player forwards the signs of a
//! block of at most `b` coordinates, with top-third pruning.

use serde::{Deserialize, Serialize};

use super::pruning::{clip_unit, group_size, keep_top, rounds_for, Estimate, Players, RoundLog};
use super::source::SampleSource;
use crate::channels::{make_subset_forward_channel, Channel, ConstraintSpec, Point};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommParams {
    pub n: u64,
    pub d: usize,
    pub s: usize,
    pub bits: usize,
}

impl CommParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.s == 0 || self.s > self.d {
            return Err(invalid(format!("need 1 ≤ s ≤ d, got d = {}, s = {}", self.d, self.s)));
        }
        if self.bits == 0 || self.bits > self.d {
            return Err(invalid(format!("need 1 ≤ b ≤ d, got b = {} with d = {}", self.bits, self.d)));
        }
        Ok(())
    }

    /// Size the survivor set is pruned down to.
    pub fn target(&self) -> usize {
        (3 * self.s).max(self.bits)
    }

    pub fn rounds(&self) -> u32 {
        let t = rounds_for(self.d, self.target());
        // the wide-message branch needs |S_T| ≤ b before the last round
        if self.bits > 3 * self.s && t == 0 && self.d > self.bits {
            1
        } else {
            t
        }
    }
}

/// Forwarding channels by block length, each validated against the bit budget.
struct Forwarders {
    bits: usize,
    by_len: Vec<Option<Channel>>,
}

impl Forwarders {
    fn new(bits: usize) -> Self {
        Self { bits, by_len: vec![None; bits + 1] }
    }

    fn get(&mut self, len: usize) -> Result<&Channel> {
        if len == 0 || len > self.bits {
            return Err(Error::Domain(format!("block of {len} coordinates exceeds the {}-bit budget", self.bits)));
        }
        if self.by_len[len].is_none() {
            let coords: Vec<usize> = (0..len).collect();
            let ch = make_subset_forward_channel(len, &coords)?;
            let budget = ConstraintSpec::Comm { bits: self.bits as u32 };
            if !ch.satisfies(&budget) {
                return Err(Error::Domain(format!("forwarding channel violates {budget:?}")));
            }
            self.by_len[len] = Some(ch);
        }
        Ok(self.by_len[len].as_ref().expect("just filled"))
    }
}

/// Players `start..start+size` each forward the signs of `block`; adds the
/// ±1 messages into `sums` (aligned with `block`).
fn block_sums(
    ch: &Channel,
    src: &dyn SampleSource,
    block: &[usize],
    start: u64,
    size: u64,
    sums: &mut [i64],
) -> Result<()> {
    let l = block.len();
    let mut x = vec![0.0; l];
    for p in start..start + size {
        for (v, &j) in x.iter_mut().zip(block) {
            *v = src.value(p, j);
        }
        let y = ch.output_for_uniform(Point::Real(&x), 0.0)?;
        for (pos, m) in sums.iter_mut().enumerate() {
            *m += 2 * ((y >> (l - 1 - pos)) & 1) as i64 - 1;
        }
    }
    Ok(())
}

pub fn alg2_comm_estimate(params: &CommParams, src: &dyn SampleSource) -> Result<Estimate> {
    params.validate()?;
    let CommParams { n, d, s, bits: b } = *params;
    if src.dim() != d {
        return Err(invalid(format!("source has dimension {}, protocol expects {d}", src.dim())));
    }
    let mut fwd = Forwarders::new(b);
    let mut players = Players::new(n, src, format!("bit-limited estimator (n = {n}, d = {d}, s = {s}, b = {b})"))?;
    let mut survivors: Vec<usize> = (0..d).collect();
    let mut rounds = Vec::new();
    let last = params.rounds();
    for t in 1..=last {
        let size = group_size(n, b as u64, t, 18 * d as u64);
        let groups = survivors.len().div_ceil(b) as u64;
        let mut start = players.take(t, groups, size)?;
        let mut sums = vec![0i64; survivors.len()];
        for (block, out) in survivors.chunks(b).zip(sums.chunks_mut(b)) {
            block_sums(fwd.get(block.len())?, src, block, start, size, out)?;
            start += size;
        }
        let keep = if t == last { params.target() } else { survivors.len().div_ceil(3) };
        let kept = keep_top(&survivors, &sums, keep);
        rounds.push(RoundLog {
            round: t,
            survivors: std::mem::replace(&mut survivors, kept.clone()),
            group_size: size,
            groups,
            sums,
            kept,
            message_bits: b.min(d) as u32,
        });
    }
    let mut raw = vec![0.0; d];
    let (support, sizes) = if b <= 3 * s {
        let sizes = players.take_rest(last + 1, survivors.len().div_ceil(b))?;
        let mut start = players.used() - sizes.iter().sum::<u64>();
        for (block, &size) in survivors.chunks(b).zip(&sizes) {
            let mut sums = vec![0i64; block.len()];
            block_sums(fwd.get(block.len())?, src, block, start, size, &mut sums)?;
            for (&j, m) in block.iter().zip(sums) {
                raw[j] = m as f64 / size as f64;
            }
            start += size;
        }
        (survivors, sizes)
    } else {
        // every remaining player forwards all of S_T; keep the 3s largest
        let sizes = players.take_rest(last + 1, 1)?;
        let start = players.used() - sizes[0];
        let mut sums = vec![0i64; survivors.len()];
        block_sums(fwd.get(survivors.len())?, src, &survivors, start, sizes[0], &mut sums)?;
        let kept = keep_top(&survivors, &sums, 3 * s);
        for (&j, &m) in survivors.iter().zip(&sums) {
            if kept.binary_search(&j).is_ok() {
                raw[j] = m as f64 / sizes[0] as f64;
            }
        }
        (kept, sizes)
    };
    Ok(Estimate {
        mu_hat: clip_unit(&raw),
        raw,
        support,
        rounds,
        final_group_sizes: sizes,
        players_used: players.used(),
    })
}
