//! Certifiers for the contraction inequalities on exactly enumerable instances.

use std::collections::HashSet;
use std::sync::Arc;

use serde::Serialize;

use super::functionals::{info_functional, mutual_info_bits, var_functional};
use super::protocol::Protocol;
use super::transcript::{
    all_transcripts, avg_discrepancy_from, enumerate, hellinger_sq, mixture_from, tv, tv_hellinger_ordered,
    TranscriptDist, DEFAULT_BUDGET,
};
use crate::channels::Channel;
use crate::error::{invalid, Error, Result};
use crate::families::lp_loss;
use crate::perturbations::{Construction, PerturbedFamily, Signs};

/// Absolute slack absorbed by every inequality check.
pub const SLACK: f64 = 1e-9;
/// Largest perturbation dimension for the max-over-z right-hand sides.
pub const MAX_THEOREM_K: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub rhs: f64,
    /// per-round maxima of the functional before the constant prefactor
    pub per_round: Vec<f64>,
    /// lhs / rhs (0 when both vanish)
    pub ratio: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(lhs: f64, prefactor: f64, per_round: Vec<f64>) -> Self {
        let rhs = prefactor * per_round.iter().sum::<f64>();
        let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > SLACK { f64::INFINITY } else { 0.0 };
        Self { rhs, per_round, ratio, pass: lhs <= rhs + SLACK }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremRecord {
    pub k: usize,
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    pub avg_discrepancy: f64,
    pub per_coordinate_tv: Vec<f64>,
    /// squared average discrepancy
    pub lhs: f64,
    /// score-energy form, constant 7
    pub main: BoundCheck,
    /// variance form, constant 7
    pub var: BoundCheck,
    /// mutual-information form (bits), constant 14·ln 2; Bernoulli only
    pub subgaussian: Option<BoundCheck>,
    /// score-energy form with the caller's channel grid added to every round
    pub main_with_grid: Option<BoundCheck>,
    pub reachable_channels: usize,
    pub tv_hellinger_ordered: bool,
    pub pass: bool,
}

/// Distinct channels the rule can select in each round, over all prefixes.
pub fn reachable_channels(proto: &Protocol, budget: u64) -> Result<Vec<Vec<Arc<Channel>>>> {
    let mut rounds = Vec::with_capacity(proto.players());
    let mut level: Vec<Vec<u32>> = vec![Vec::new()];
    let mut visited = 0u64;
    for t in 0..proto.players() {
        let mut seen = HashSet::new();
        let mut chans = Vec::new();
        let mut next = Vec::new();
        for prefix in &level {
            let ch = proto.channel_at(t, prefix)?;
            if seen.insert(Arc::as_ptr(&ch) as usize) {
                chans.push(ch.clone());
            }
            if t + 1 < proto.players() {
                for y in 0..ch.output_count() as u32 {
                    visited += 1;
                    if visited > budget {
                        return Err(Error::Budget { what: "message prefixes", needed: u128::from(visited), limit: u128::from(budget) });
                    }
                    let mut p = prefix.clone();
                    p.push(y);
                    next.push(p);
                }
            }
        }
        rounds.push(chans);
        level = next;
    }
    Ok(rounds)
}

fn round_max<F>(rounds: &[Vec<Arc<Channel>>], zs: &[Signs], extra: &[Channel], f: F) -> Result<Vec<f64>>
where
    F: Fn(&Channel, &Signs) -> Result<f64>,
{
    rounds
        .iter()
        .map(|chans| {
            let mut best = 0.0f64;
            for z in zs {
                for ch in chans.iter().map(|c| c.as_ref()).chain(extra.iter()) {
                    best = best.max(f(ch, z)?);
                }
            }
            Ok(best)
        })
        .collect()
}

/// Checks the score-energy contraction bound and its variance and
/// mutual-information relaxations.
pub fn check_theorem_main(
    proto: &Protocol,
    fam: &PerturbedFamily,
    tau: f64,
    grid: Option<&[Channel]>,
) -> Result<TheoremRecord> {
    let k = fam.k();
    if k > MAX_THEOREM_K {
        return Err(Error::Budget { what: "perturbation dimension", needed: k as u128, limit: MAX_THEOREM_K as u128 });
    }
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(invalid(format!("prior bias must lie in (0, 1/2], got {tau}")));
    }
    let laws = all_transcripts(proto, fam)?;
    let (avg, per_tv) = avg_discrepancy_from(&laws, tau, k);
    let mut ordered = true;
    for i in 0..k {
        let (p, q) = (mixture_from(&laws, tau, i, 1), mixture_from(&laws, tau, i, -1));
        ordered &= tv_hellinger_ordered(per_tv[i], hellinger_sq(&p, &q));
    }
    let lhs = avg * avg;
    let zs: Vec<Signs> = Signs::enumerate(k)?.collect();
    let rounds = reachable_channels(proto, DEFAULT_BUDGET)?;
    let alpha = fam.alpha();
    let pre7 = 7.0 / k as f64 * alpha * alpha;

    let info = round_max(&rounds, &zs, &[], |ch, z| info_functional(ch, fam, z))?;
    let var = round_max(&rounds, &zs, &[], |ch, z| var_functional(ch, &fam.input_dist(z)?))?;
    let main = BoundCheck::new(lhs, pre7, info);
    let var = BoundCheck::new(lhs, pre7, var);
    let subgaussian = if fam.kind() == Construction::Bernoulli {
        let g = fam.gamma();
        let sigma2 = (1.0 + g) / (1.0 - g);
        let mi = round_max(&rounds, &zs, &[], |ch, z| mutual_info_bits(ch, &fam.input_dist(z)?))?;
        Some(BoundCheck::new(lhs, 14.0 * std::f64::consts::LN_2 / k as f64 * alpha * alpha * sigma2, mi))
    } else {
        None
    };
    let main_with_grid = match grid {
        Some(g) => Some(BoundCheck::new(lhs, pre7, round_max(&rounds, &zs, g, |ch, z| info_functional(ch, fam, z))?)),
        None => None,
    };
    let pass = main.pass && var.pass && subgaussian.as_ref().is_none_or(|s| s.pass) && ordered;
    Ok(TheoremRecord {
        k,
        n: proto.players(),
        tau,
        alpha,
        avg_discrepancy: avg,
        per_coordinate_tv: per_tv,
        lhs,
        main,
        var,
        subgaussian,
        main_with_grid,
        reachable_channels: rounds.iter().map(Vec::len).sum(),
        tv_hellinger_ordered: ordered,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CutPasteRecord {
    pub z: Vec<i8>,
    pub i: usize,
    /// `H²(p_z, p_{z⊕i})`
    pub lhs: f64,
    /// `H²(p_z, p_{t←z⊕i})` for each player `t`
    pub terms: Vec<f64>,
    /// `7 Σ_t terms`
    pub rhs: f64,
    pub ratio: f64,
    pub tv_hellinger_ordered: bool,
    pub pass: bool,
}

/// One-player-swap decomposition of the squared Hellinger distance.
pub fn check_cut_paste(proto: &Protocol, fam: &PerturbedFamily, z: &Signs, i: usize) -> Result<CutPasteRecord> {
    let flipped = z.flip(i)?;
    let base = fam.input_dist(z)?;
    let swap = fam.input_dist(&flipped)?;
    let n = proto.players();
    let pz = enumerate(proto, &vec![&base; n], DEFAULT_BUDGET)?;
    let pf = enumerate(proto, &vec![&swap; n], DEFAULT_BUDGET)?;
    let lhs = hellinger_sq(&pz, &pf);
    let mut ordered = tv_hellinger_ordered(tv(&pz, &pf), lhs);
    let mut terms = Vec::with_capacity(n);
    for t in 0..n {
        let mut laws = vec![&base; n];
        laws[t] = &swap;
        let pt = enumerate(proto, &laws, DEFAULT_BUDGET)?;
        let h = hellinger_sq(&pz, &pt);
        ordered &= tv_hellinger_ordered(tv(&pz, &pt), h);
        terms.push(h);
    }
    let rhs = 7.0 * terms.iter().sum::<f64>();
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(CutPasteRecord {
        z: z.to_vec(),
        i,
        lhs,
        terms,
        rhs,
        ratio,
        tv_hellinger_ordered: ordered,
        pass: lhs <= rhs + SLACK && ordered,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureChangeRecord {
    /// `‖E[Φa]‖² / E[a]²`
    pub lhs: f64,
    /// `2σ²(E[a ln a]/E[a] + ln(1/E[a]))`, natural log
    pub rhs: f64,
    pub mean_weight: f64,
    pub pass: bool,
}

/// Reweighting bound for a mean-zero score vector with σ²-subgaussian coordinates.
pub fn measure_change_check(p: &[f64], phi: &[Vec<f64>], a: &[f64], sigma2: f64) -> Result<MeasureChangeRecord> {
    if p.len() != phi.len() || p.len() != a.len() || p.is_empty() {
        return Err(invalid("distribution, score table and weights must be aligned"));
    }
    if p.iter().any(|q| !(*q >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
        return Err(invalid("p must be a probability vector"));
    }
    if a.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    if !(sigma2 > 0.0) {
        return Err(invalid("variance proxy must be positive"));
    }
    let dim = phi[0].len();
    if phi.iter().any(|f| f.len() != dim) {
        return Err(invalid("score rows must share a dimension"));
    }
    let ea: f64 = p.iter().zip(a).map(|(q, w)| q * w).sum();
    if ea <= 0.0 {
        return Err(invalid("weights have zero mean"));
    }
    let mut e_phi_a = vec![0.0; dim];
    for ((q, f), w) in p.iter().zip(phi).zip(a) {
        for (acc, v) in e_phi_a.iter_mut().zip(f) {
            *acc += q * v * w;
        }
    }
    let lhs = e_phi_a.iter().map(|v| v * v).sum::<f64>() / (ea * ea);
    let ealna: f64 = p.iter().zip(a).filter(|(_, w)| **w > 0.0).map(|(q, w)| q * w * w.ln()).sum();
    let rhs = 2.0 * sigma2 * (ealna / ea - ea.ln());
    Ok(MeasureChangeRecord { lhs, rhs, mean_weight: ea, pass: lhs <= rhs + SLACK })
}

/// Estimator of `θ` from a transcript.
pub type TranscriptEstimator = Arc<dyn Fn(&[u32]) -> Vec<f64> + Send + Sync>;

/// Rule turning a transcript into a guess of `Z`.
#[derive(Clone)]
pub enum Decoder {
    /// Coordinatewise maximum a posteriori.
    Bayes,
    /// Nearest `θ_z` in `ℓ_p` to an estimate; the posterior mean of `θ_Z`
    /// when no estimator is given. Ties go to the lexicographically
    /// smallest `z` (−1 before +1).
    ArgminLp { p: f64, estimator: Option<TranscriptEstimator> },
    Custom(Arc<dyn Fn(&[u32]) -> Signs + Send + Sync>),
}

impl std::fmt::Debug for Decoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Decoder::Bayes => write!(f, "Bayes"),
            Decoder::ArgminLp { p, estimator } => {
                write!(f, "ArgminLp(p={p}, custom_estimator={})", estimator.is_some())
            }
            Decoder::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssouadCoordinate {
    /// `P(Z_i ≠ Ẑ_i)`
    pub error: f64,
    pub tv: f64,
    /// `τ(1 − TV)`
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssouadRecord {
    pub decoder: String,
    pub tau: f64,
    pub per_coordinate: Vec<AssouadCoordinate>,
    /// `(1/(τk)) Σ_i P(Z_i ≠ Ẑ_i)`
    pub normalized_error: f64,
    /// `(1/k) Σ_i TV(p_{+i}, p_{−i})`
    pub avg_tv: f64,
    pub pass: bool,
}

fn lex_argmin(cands: impl Iterator<Item = (Signs, f64)>) -> Option<Signs> {
    let mut best: Option<(Signs, f64)> = None;
    for (z, v) in cands {
        best = match best {
            None => Some((z, v)),
            Some((bz, bv)) => {
                if v < bv || (v == bv && z.lex_cmp(&bz).is_lt()) {
                    Some((z, v))
                } else {
                    Some((bz, bv))
                }
            }
        };
    }
    best.map(|(z, _)| z)
}

/// Exact per-coordinate error of a decoder against `τ(1 − TV(p_{+i}, p_{−i}))`.
pub fn assouad_inequality_check(
    proto: &Protocol,
    fam: &PerturbedFamily,
    tau: f64,
    decoder: &Decoder,
) -> Result<AssouadRecord> {
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(invalid(format!("prior bias must lie in (0, 1/2], got {tau}")));
    }
    let k = fam.k();
    let laws = all_transcripts(proto, fam)?;
    let prior = |z: &Signs| {
        let ones = z.ones() as i32;
        tau.powi(ones) * (1.0 - tau).powi(z.len() as i32 - ones)
    };
    let plus: Vec<TranscriptDist> = (0..k).map(|i| mixture_from(&laws, tau, i, 1)).collect();
    let minus: Vec<TranscriptDist> = (0..k).map(|i| mixture_from(&laws, tau, i, -1)).collect();
    let mut support: Vec<&Vec<u32>> = laws.iter().flat_map(|(_, p)| p.table.keys()).collect();
    support.sort();
    support.dedup();
    let thetas: Vec<(Signs, Vec<f64>)> = laws.iter().map(|(z, _)| (*z, fam.theta(z))).collect();

    let decode = |y: &[u32]| -> Result<Signs> {
        match decoder {
            Decoder::Bayes => {
                let mut z = Signs::all_minus(k)?;
                for i in 0..k {
                    if tau * plus[i].prob(y) > (1.0 - tau) * minus[i].prob(y) {
                        z = z.with(i, 1);
                    }
                }
                Ok(z)
            }
            Decoder::ArgminLp { p, estimator } => {
                let est = match estimator {
                    Some(f) => f(y),
                    None => {
                        let mut num = vec![0.0; thetas[0].1.len()];
                        let mut den = 0.0;
                        for ((z, pz), (_, th)) in laws.iter().zip(&thetas) {
                            let w = prior(z) * pz.prob(y);
                            den += w;
                            num.iter_mut().zip(th).for_each(|(a, b)| *a += w * b);
                        }
                        num.iter().map(|v| v / den).collect()
                    }
                };
                let scored: Vec<(Signs, f64)> = thetas
                    .iter()
                    .map(|(z, th)| Ok((*z, lp_loss(th, &est, *p)?)))
                    .collect::<Result<_>>()?;
                lex_argmin(scored.into_iter()).ok_or_else(|| invalid("empty sign space"))
            }
            Decoder::Custom(f) => {
                let z = f(y);
                if z.len() != k {
                    return Err(invalid("custom decoder returned a vector of the wrong length"));
                }
                Ok(z)
            }
        }
    };

    let mut errors = vec![0.0; k];
    for y in support {
        let zhat = decode(y)?;
        for (z, pz) in &laws {
            let w = prior(z) * pz.prob(y);
            if w == 0.0 {
                continue;
            }
            for (i, e) in errors.iter_mut().enumerate() {
                if zhat.get(i) != z.get(i) {
                    *e += w;
                }
            }
        }
    }
    let per: Vec<AssouadCoordinate> = (0..k)
        .map(|i| {
            let d = tv(&plus[i], &minus[i]);
            let bound = tau * (1.0 - d);
            AssouadCoordinate { error: errors[i], tv: d, bound, pass: errors[i] + SLACK >= bound }
        })
        .collect();
    let normalized_error = errors.iter().sum::<f64>() / (tau * k as f64);
    let avg_tv = per.iter().map(|c| c.tv).sum::<f64>() / k as f64;
    let pass = per.iter().all(|c| c.pass);
    Ok(AssouadRecord {
        decoder: format!("{decoder:?}"),
        tau,
        per_coordinate: per,
        normalized_error,
        avg_tv,
        pass,
    })
}
