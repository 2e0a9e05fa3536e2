//! Randomized certification suites over the contraction, perturbation,
//! and protocol checks.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{
    assouad_inequality_check, check_cut_paste, check_theorem_main, measure_change_check, random_instance, Decoder,
    InstanceOptions,
};
use crate::error::{invalid, Result};
use crate::families::{lp_loss, sign_vectors};
use crate::perturbations::{PerturbedFamily, Signs};
use crate::protocols::{binomial_moment_check, invert_sign_mean};
use crate::quadrature::GaussHermite;
use crate::rng::StreamKey;
use crate::special::{erf_inv, eta, reduction_lipschitz};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Assumptions,
    Contraction,
    CutPaste,
    Assouad,
    MeasureChange,
    Binomial,
    Reduction,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Assumptions,
        Suite::Contraction,
        Suite::CutPaste,
        Suite::Assouad,
        Suite::MeasureChange,
        Suite::Binomial,
        Suite::Reduction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Assumptions => "assumptions",
            Suite::Contraction => "contraction",
            Suite::CutPaste => "cut-paste",
            Suite::Assouad => "assouad",
            Suite::MeasureChange => "measure-change",
            Suite::Binomial => "binomial",
            Suite::Reduction => "reduction",
        }
    }

    /// Random instances per run (for `binomial`, the largest trial count).
    pub fn default_budget(self) -> u64 {
        match self {
            Suite::Assumptions => 30,
            Suite::Contraction => 1000,
            Suite::CutPaste => 200,
            Suite::Assouad => 200,
            Suite::MeasureChange => 100,
            Suite::Binomial => 20,
            Suite::Reduction => 1000,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|v| v.name()).collect();
            invalid(format!("unknown suite {s:?}; valid suites: {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: u64,
    pub failures: u64,
    /// `max(0, max(lhs − rhs))` over every checked inequality.
    pub max_slack_used: f64,
    /// Wall-clock seconds.
    pub elapsed: f64,
    /// One line per failing trial.
    #[serde(skip)]
    pub failure_details: Vec<String>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.failures == 0
    }
}

/// Result of one trial: the largest `lhs − rhs` it saw, and a failure note.
struct Outcome {
    slack: f64,
    failure: Option<String>,
}

impl Outcome {
    fn new(slack: f64, pass: bool, what: impl FnOnce() -> String) -> Self {
        Self { slack, failure: (!pass).then(what) }
    }
}

fn trial_seed(seed: u64, suite: Suite, t: u64) -> u64 {
    StreamKey::from_seed(seed).derive(suite as u64).words(t, 0).0
}

pub fn run_verification_suite(name: &str, seed: u64, budget: Option<u64>) -> Result<SuiteReport> {
    let suite: Suite = name.parse()?;
    let budget = budget.unwrap_or(suite.default_budget());
    let start = Instant::now();
    let outcomes: Vec<Outcome> = match suite {
        Suite::Binomial => binomial(budget)?,
        _ => (0..budget)
            .into_par_iter()
            .map(|t| {
                let s = trial_seed(seed, suite, t);
                let r = match suite {
                    Suite::Assumptions => assumptions(s),
                    Suite::Contraction => contraction(s),
                    Suite::CutPaste => cut_paste(s),
                    Suite::Assouad => assouad(s),
                    Suite::MeasureChange => measure_change(s),
                    Suite::Reduction => reduction(s),
                    Suite::Binomial => unreachable!(),
                };
                r.unwrap_or_else(|e| Outcome { slack: 0.0, failure: Some(format!("trial {t} (seed {s}): error: {e}")) })
            })
            .collect(),
    };
    let failure_details: Vec<String> = outcomes.iter().filter_map(|o| o.failure.clone()).collect();
    Ok(SuiteReport {
        suite: suite.name().to_string(),
        trials: outcomes.len() as u64,
        failures: failure_details.len() as u64,
        max_slack_used: outcomes.iter().map(|o| o.slack).fold(0.0, f64::max),
        elapsed: start.elapsed().as_secs_f64(),
        failure_details,
    })
}

fn random_signs(rng: &mut ChaCha8Rng, k: usize, count: usize) -> Result<Vec<Signs>> {
    if k <= 6 {
        return Ok(Signs::enumerate(k)?.collect());
    }
    let mut zs = vec![Signs::all_minus(k)?, Signs::new(k, (1u64 << k) - 1)?];
    for _ in 0..count {
        zs.push(Signs::new(k, rng.random_range(0..1u64 << k))?);
    }
    Ok(zs)
}

/// Exact tolerance for the finite constructions; quadrature tolerance for the Gaussian one.
pub const EXACT_TOL: f64 = 1e-10;
pub const QUADRATURE_TOL: f64 = 1e-6;

fn assumptions(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus = [0.1, 0.25, 0.5];
    let (fam, tol) = match seed % 3 {
        0 => {
            let d = rng.random_range(1..=10);
            let gamma = [0.05, 0.2, 0.4, 0.5][rng.random_range(0..4)];
            (PerturbedFamily::bernoulli(d, gamma, taus[rng.random_range(0..3)])?, EXACT_TOL)
        }
        1 => {
            let big_d = 2 * rng.random_range(1..=6);
            let gamma = [0.1, 0.5, 1.0][rng.random_range(0..3)] / (2.0 * big_d as f64);
            (PerturbedFamily::discrete(big_d, gamma)?, EXACT_TOL)
        }
        _ => {
            let d = rng.random_range(1..=6);
            let gamma = [0.05, 0.1, 0.25, 0.5][rng.random_range(0..4)];
            (PerturbedFamily::gaussian(d, gamma, taus[rng.random_range(0..3)])?, QUADRATURE_TOL)
        }
    };
    let zs = random_signs(&mut rng, fam.k(), 14)?;
    let rep = fam.validate_assumptions(&zs, tol, &GaussHermite::default())?;
    let v = &rep.max_violations;
    let worst = [v.density_ratio, v.mass, v.mean_zero, v.gram, v.alpha_bound, v.subgaussian]
        .into_iter()
        .chain(v.decomposition)
        .chain(v.split_moments)
        .fold(0.0, f64::max);
    Ok(Outcome::new(worst, rep.pass, || format!("seed {seed}: {rep:?}")))
}

fn contraction(seed: u64) -> Result<Outcome> {
    let inst = random_instance(seed, &InstanceOptions::default())?;
    let rec = check_theorem_main(&inst.protocol, &inst.family, inst.family.tau(), None)?;
    let slack = [Some(&rec.main), Some(&rec.var), rec.subgaussian.as_ref()]
        .into_iter()
        .flatten()
        .map(|b| rec.lhs - b.rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome::new(slack, rec.pass, || format!("{:?}: lhs {} main {} var {}", inst.spec, rec.lhs, rec.main.rhs, rec.var.rhs)))
}

fn cut_paste(seed: u64) -> Result<Outcome> {
    let opts = InstanceOptions { min_n: 2, max_n: 4, ..InstanceOptions::default() };
    let inst = random_instance(seed, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let k = inst.family.k();
    let z = Signs::new(k, rng.random_range(0..1u64 << k))?;
    let rec = check_cut_paste(&inst.protocol, &inst.family, &z, rng.random_range(0..k))?;
    Ok(Outcome::new(rec.lhs - rec.rhs, rec.pass, || format!("{:?}: {rec:?}", inst.spec)))
}

fn assouad(seed: u64) -> Result<Outcome> {
    let inst = random_instance(seed, &InstanceOptions::default())?;
    let tau = inst.family.tau();
    let mut slack = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for dec in [Decoder::Bayes, Decoder::ArgminLp { p: 2.0, estimator: None }] {
        let rec = assouad_inequality_check(&inst.protocol, &inst.family, tau, &dec)?;
        for c in &rec.per_coordinate {
            slack = slack.max(c.bound - c.error);
        }
        if !rec.pass {
            bad.push(rec.decoder.clone());
        }
    }
    Ok(Outcome::new(slack, bad.is_empty(), || format!("{:?}: decoders {bad:?} fail", inst.spec)))
}

fn measure_change(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=6);
    let phi: Vec<Vec<f64>> = sign_vectors(d)?.into_iter().map(|x| x.into_iter().map(f64::from).collect()).collect();
    let p = vec![1.0 / phi.len() as f64; phi.len()];
    let mut a: Vec<f64> = (0..phi.len()).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random() }).collect();
    if a.iter().all(|v| *v == 0.0) {
        a[0] = 1.0;
    }
    let rec = measure_change_check(&p, &phi, &a, 1.0)?;
    Ok(Outcome::new(rec.lhs - rec.rhs, rec.pass, || format!("seed {seed}: d = {d}, {rec:?}")))
}

fn binomial(max_m: u64) -> Result<Vec<Outcome>> {
    let qs: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let m = u32::try_from(max_m).map_err(|_| invalid("binomial budget is the largest trial count"))?;
    let rec = binomial_moment_check(m, &qs, &[1.0, 2.0, 4.0, 8.0])?;
    Ok(rec
        .entries
        .into_iter()
        .map(|e| Outcome::new(e.lhs - e.rhs, e.pass, || format!("{e:?}")))
        .collect())
}

/// Largest admissible round-trip error of the inverse error function.
pub const ROUNDTRIP_TOL: f64 = 1e-12;

fn reduction(seed: u64) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = eta();
    let d = rng.random_range(1..=16);
    let nu: Vec<f64> = (0..d).map(|_| rng.random_range(-e..=e)).collect();
    let nu_hat: Vec<f64> = (0..d).map(|_| rng.random_range(-e..=e)).collect();
    let (mu, mu_hat) = (invert_sign_mean(&nu)?, invert_sign_mean(&nu_hat)?);
    let mut slack = f64::NEG_INFINITY;
    let mut pass = true;
    for p in [1.0, 2.0, f64::INFINITY] {
        let lhs = lp_loss(&mu, &mu_hat, p)?;
        let rhs = reduction_lipschitz() * lp_loss(&nu, &nu_hat, p)?;
        slack = slack.max(lhs - rhs);
        pass &= lhs <= rhs + 1e-12;
    }
    for &y in &nu {
        let err = (libm::erf(erf_inv(y)?) - y).abs();
        slack = slack.max(err - ROUNDTRIP_TOL);
        pass &= err <= ROUNDTRIP_TOL;
    }
    Ok(Outcome::new(slack, pass, || format!("seed {seed}: d = {d}")))
}
