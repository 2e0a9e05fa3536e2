//! Acceptance criteria, one line each. Run with
//! `cargo test -p infobound --test acceptance` (optionally followed by
//! `-- <criterion numbers>` to run a subset).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use infobound::channels::{ldp_ratio, make_rr_channel, table_channel, Channel, ConstraintSpec, InputDist, Point};
use infobound::contraction::{
    assouad_inequality_check, check_cut_paste, check_theorem_main, measure_change_check, mutual_info_bits,
    random_instance, var_functional, Decoder, InstanceOptions, Protocol, RandomInstance, TheoremRecord,
};
use infobound::families::{lp_loss, sign_vectors, FiniteDist};
use infobound::harness::{
    monte_carlo_risk, rate_fit, EstimatorKind, ExperimentConfig, FamilyKind, FamilySpec, LossExponent,
};
use infobound::perturbations::{sparsity_prior_prob, Construction, PerturbedFamily, Signs};
use infobound::protocols::{binomial_moment_check, invert_sign_mean, sign_mean, Backend};
use infobound::quadrature::GaussHermite;
use infobound::special::{erf_inv, eta, reduction_lipschitz};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Brute-force oracles for the exact transcript engine.

/// All output prefixes of length `t`, listed with the channel used at each step.
fn prefixes(proto: &Protocol, t: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for r in 0..t {
        let mut next = Vec::new();
        for p in &out {
            let w = proto.channel_at(r, p).unwrap().output_count() as u32;
            for y in 0..w {
                let mut q = p.clone();
                q.push(y);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn row_prob(ch: &Channel, x: &[i32], y: u32) -> f64 {
    ch.row(Point::Symbol(x)).unwrap().prob(y as u64)
}

/// `p_z(y)` for every full transcript, from the product formula.
fn brute_transcript(proto: &Protocol, law: &FiniteDist) -> BTreeMap<Vec<u32>, f64> {
    let n = proto.players();
    prefixes(proto, n)
        .into_iter()
        .map(|y| {
            let mut p = 1.0;
            for t in 0..n {
                let ch = proto.channel_at(t, &y[..t]).unwrap();
                p *= law.points().iter().zip(law.probs()).map(|(x, px)| px * row_prob(&ch, x, y[t])).sum::<f64>();
            }
            (y, p)
        })
        .collect()
}

fn prior(z: &Signs, tau: f64) -> f64 {
    z.to_vec().iter().map(|&s| if s > 0 { tau } else { 1.0 - tau }).product()
}

/// Average over coordinates of `TV(p_{+i}, p_{−i})`.
fn brute_avg_tv(inst: &RandomInstance) -> f64 {
    let fam = &inst.family;
    let (k, tau) = (fam.k(), fam.tau());
    let laws: Vec<(Signs, BTreeMap<Vec<u32>, f64>)> = Signs::enumerate(k)
        .unwrap()
        .map(|z| {
            let law = fam.finite_support(&z).unwrap();
            let t = brute_transcript(&inst.protocol, &law);
            (z, t)
        })
        .collect();
    let keys: Vec<Vec<u32>> = laws[0].1.keys().cloned().collect();
    let mut total = 0.0;
    for i in 0..k {
        let mix = |sign: i8| -> Vec<f64> {
            let mut acc = vec![0.0; keys.len()];
            let mut mass = 0.0;
            for (z, t) in &laws {
                if z.get(i) == sign {
                    let w = prior(z, tau);
                    mass += w;
                    for (a, y) in acc.iter_mut().zip(&keys) {
                        *a += w * t[y];
                    }
                }
            }
            acc.into_iter().map(|a| a / mass).collect()
        };
        let (plus, minus) = (mix(1), mix(-1));
        total += 0.5 * plus.iter().zip(&minus).map(|(a, b)| (a - b).abs()).sum::<f64>();
    }
    total / k as f64
}

/// `Σ_i Σ_y E[φ_i W(y|X)]² / E[W(y|X)]` from the channel rows.
fn brute_info(ch: &Channel, fam: &PerturbedFamily, z: &Signs) -> f64 {
    let law = fam.finite_support(z).unwrap();
    let mut total = 0.0;
    for y in 0..ch.output_count() as u32 {
        let ew: f64 = law.points().iter().zip(law.probs()).map(|(x, p)| p * row_prob(ch, x, y)).sum();
        for i in 0..fam.k() {
            let e: f64 = law
                .points()
                .iter()
                .zip(law.probs())
                .map(|(x, p)| {
                    let xf: Vec<f64> = x.iter().map(|&c| f64::from(c)).collect();
                    p * fam.phi(z, i, &xf) * row_prob(ch, x, y)
                })
                .sum();
            if ew > 0.0 {
                total += e * e / ew;
            }
        }
    }
    total
}

/// `(7/k) α² Σ_t max_z max_{reachable W} info`.
fn brute_main_rhs(inst: &RandomInstance) -> f64 {
    let fam = &inst.family;
    let k = fam.k();
    let zs: Vec<Signs> = Signs::enumerate(k).unwrap().collect();
    let mut sum = 0.0;
    for t in 0..inst.protocol.players() {
        let mut best = 0.0f64;
        for p in prefixes(&inst.protocol, t) {
            let ch = inst.protocol.channel_at(t, &p).unwrap();
            for z in &zs {
                best = best.max(brute_info(&ch, fam, z));
            }
        }
        sum += best;
    }
    7.0 / k as f64 * fam.alpha().powi(2) * sum
}

// ---------------------------------------------------------------------------

struct Certified {
    records: Vec<(RandomInstance, TheoremRecord)>,
    secs: f64,
}

fn certify_instances() -> Certified {
    let start = Instant::now();
    let opts = InstanceOptions::default();
    let records = (0..1000u64)
        .map(|seed| {
            let inst = random_instance(seed, &opts).unwrap();
            let rec = check_theorem_main(&inst.protocol, &inst.family, inst.family.tau(), None).unwrap();
            (inst, rec)
        })
        .collect();
    Certified { records, secs: start.elapsed().as_secs_f64() }
}

fn criterion_1(c: &Certified) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut kinds = [0usize; 2];
    let mut max_n = 0;
    let mut max_w = 0;
    for (inst, rec) in &c.records {
        let slack = rec.main.rhs - rec.lhs;
        ensure(slack >= -1e-9, || format!("{:?}: slack {slack}", inst.spec))?;
        worst = worst.max(-slack);
        kinds[usize::from(inst.spec.kind == Construction::Discrete)] += 1;
        max_n = max_n.max(inst.spec.n);
        max_w = max_w.max(
            (0..inst.spec.n)
                .flat_map(|t| prefixes(&inst.protocol, t).into_iter().map(move |p| (t, p)))
                .map(|(t, p)| inst.protocol.channel_at(t, &p).unwrap().output_count())
                .max()
                .unwrap(),
        );
    }
    ensure(kinds[0] > 0 && kinds[1] > 0 && max_n == 5 && max_w == 3, || {
        format!("instance mix not covered: {kinds:?}, n ≤ {max_n}, |Y| ≤ {max_w}")
    })?;
    // independent recomputation on a subset
    let mut checked = 0;
    for (inst, rec) in c.records.iter().step_by(10) {
        let tv = brute_avg_tv(inst);
        ensure((tv - rec.avg_discrepancy).abs() <= 1e-12, || {
            format!("{:?}: engine TV {} vs oracle {tv}", inst.spec, rec.avg_discrepancy)
        })?;
        let rhs = brute_main_rhs(inst);
        ensure((rhs - rec.main.rhs).abs() <= 1e-12 * rhs.max(1e-300) + 1e-15, || {
            format!("{:?}: engine rhs {} vs oracle {rhs}", inst.spec, rec.main.rhs)
        })?;
        ensure(tv * tv <= rhs + 1e-9, || format!("{:?}: oracle bound fails", inst.spec))?;
        checked += 1;
    }
    ensure(c.secs < 120.0, || format!("took {:.1}s", c.secs))?;
    Ok(format!(
        "1000 instances ({} Bernoulli, {} discrete), max lhs−rhs {worst:.3e}, {checked} cross-checked by brute force, {:.1}s",
        kinds[0], kinds[1], c.secs
    ))
}

fn criterion_2(c: &Certified) -> Check {
    let mut sg = 0;
    for (inst, rec) in &c.records {
        ensure(rec.lhs <= rec.var.rhs + 1e-9, || format!("{:?}: var bound {} > {}", inst.spec, rec.lhs, rec.var.rhs))?;
        match (&rec.subgaussian, inst.spec.kind) {
            (Some(b), Construction::Bernoulli) => {
                ensure(rec.lhs <= b.rhs + 1e-9, || format!("{:?}: MI bound {} > {}", inst.spec, rec.lhs, b.rhs))?;
                sg += 1;
            }
            (None, Construction::Discrete) => {}
            _ => return Err(format!("{:?}: unexpected MI record", inst.spec)),
        }
    }
    Ok(format!("variance form on 1000 instances, information form on {sg} Bernoulli instances"))
}

/// Random ε-LDP table: a uniform-row mixture pushed to the privacy boundary.
fn random_ldp_channel(rng: &mut ChaCha8Rng, eps: f64) -> Channel {
    let nx = rng.random_range(2..=5);
    let ny = rng.random_range(2..=5);
    let norm = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
    };
    let base = norm((0..ny).map(|_| rng.random::<f64>() + 0.05).collect());
    let free: Vec<Vec<f64>> = (0..nx).map(|_| norm((0..ny).map(|_| rng.random::<f64>()).collect())).collect();
    let rows = |lam: f64| -> Vec<Vec<f64>> {
        free.iter().map(|r| r.iter().zip(&base).map(|(a, b)| lam * a + (1.0 - lam) * b).collect()).collect()
    };
    let ratio = |rows: &[Vec<f64>]| -> f64 {
        (0..ny)
            .map(|y| {
                let col: Vec<f64> = rows.iter().map(|r| r[y]).collect();
                col.iter().cloned().fold(0.0, f64::max) / col.iter().cloned().fold(f64::INFINITY, f64::min)
            })
            .fold(1.0, f64::max)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if ratio(&rows(1.0)) <= eps.exp() {
        lo = 1.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ratio(&rows(mid)) <= eps.exp() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let inputs = (0..nx as i32).map(|x| vec![x]).collect();
    table_channel(inputs, rows(lo), vec![ConstraintSpec::Ldp { epsilon: eps }]).unwrap()
}

/// Random law with full support on the channel's input symbols.
fn random_law(rng: &mut ChaCha8Rng, ch: &Channel) -> InputDist {
    let infobound::channels::InputSpace::Finite(symbols) = ch.input() else { unreachable!() };
    let raw: Vec<f64> = symbols.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    InputDist::Finite(FiniteDist::new(symbols.clone(), raw.iter().map(|v| v / s).collect()).unwrap())
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut tightest = 0.0f64;
    for t in 0..200 {
        let eps = [0.25, 0.5, 1.0, 2.0][t % 4];
        let ch = if t % 10 == 0 { make_rr_channel(eps).unwrap() } else { random_ldp_channel(&mut rng, eps) };
        ensure(ldp_ratio(&ch).unwrap() <= eps.exp() * (1.0 + 1e-12), || format!("channel {t} not ε-LDP"))?;
        let law = random_law(&mut rng, &ch);
        let v = var_functional(&ch, &law).unwrap();
        let bound = (eps.exp() - 1.0).powi(2).min(eps.exp());
        ensure(v <= bound + 1e-9, || format!("channel {t} (ε = {eps}): {v} > {bound}"))?;
        tightest = tightest.max(v / bound);
    }
    Ok(format!("200 channels, largest Σ Var/E relative to the bound: {tightest:.3}"))
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 0..200 {
        let nx = rng.random_range(1..=6);
        let ny = rng.random_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..nx)
            .map(|_| {
                // sparse rows reach the |Y| and log|Y| extremes
                let raw: Vec<f64> = (0..ny).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random() }).collect();
                let s: f64 = raw.iter().sum();
                if s == 0.0 {
                    (0..ny).map(|y| f64::from(u8::from(y == 0))).collect()
                } else {
                    raw.into_iter().map(|v| v / s).collect()
                }
            })
            .collect();
        let ch = table_channel((0..nx as i32).map(|x| vec![x]).collect(), rows, vec![]).unwrap();
        let law = random_law(&mut rng, &ch);
        let v = var_functional(&ch, &law).unwrap();
        let mi = mutual_info_bits(&ch, &law).unwrap();
        ensure(v <= ny as f64 + 1e-9, || format!("channel {t}: Σ Var/E = {v} > {ny}"))?;
        ensure(mi <= (ny as f64).log2() + 1e-9, || format!("channel {t}: I = {mi} > log2 {ny}"))?;
    }
    Ok("200 channels within |Y| and log2|Y|".into())
}

/// Gram matrix of the Bernoulli scores under an explicitly built pmf.
fn bernoulli_gram_error(fam: &PerturbedFamily, z: &Signs) -> f64 {
    let theta = fam.theta(z);
    let k = fam.k();
    let mut gram = vec![vec![0.0; k]; k];
    for x in sign_vectors(k).unwrap() {
        let p: f64 = x.iter().zip(&theta).map(|(&xi, t)| (1.0 + f64::from(xi) * t) / 2.0).product();
        let xf: Vec<f64> = x.iter().map(|&c| f64::from(c)).collect();
        let phis: Vec<f64> = (0..k).map(|i| fam.phi(z, i, &xf)).collect();
        for a in 0..k {
            for b in 0..k {
                gram[a][b] += p * phis[a] * phis[b];
            }
        }
    }
    let mut worst = 0.0f64;
    for a in 0..k {
        for b in 0..k {
            worst = worst.max((gram[a][b] - f64::from(u8::from(a == b))).abs());
        }
    }
    worst
}

fn criterion_5() -> Check {
    let quad = GaussHermite::new(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut sample_z = |k: usize| -> Vec<Signs> {
        if k <= 6 {
            Signs::enumerate(k).unwrap().collect()
        } else {
            (0..24).map(|_| Signs::new(k, rng.random_range(0..1u64 << k)).unwrap()).collect()
        }
    };
    let mut exact_worst = 0.0f64;
    let mut count = 0;
    for d in 1..=10 {
        for gamma in [0.05, 0.2, 0.4, 0.5] {
            let fam = PerturbedFamily::bernoulli(d, gamma, 0.25).unwrap();
            let zs = sample_z(d);
            let rep = fam.validate_assumptions(&zs, 1e-10, &quad).unwrap();
            let v = &rep.max_violations;
            let worst = [v.density_ratio, v.mass, v.mean_zero, v.gram, v.alpha_bound].into_iter().fold(0.0, f64::max);
            ensure(rep.pass && worst <= 1e-10, || format!("Bernoulli d = {d}, γ = {gamma}: {rep:?}"))?;
            if d <= 6 {
                for z in &zs {
                    let g = bernoulli_gram_error(&fam, z);
                    ensure(g <= 1e-10, || format!("Bernoulli d = {d}, γ = {gamma}: oracle Gram error {g}"))?;
                }
            }
            exact_worst = exact_worst.max(worst);
            count += 1;
        }
    }
    for big_d in (2..=12).step_by(2) {
        for frac in [0.1, 0.5, 1.0] {
            let gamma = frac / (2.0 * big_d as f64);
            let fam = PerturbedFamily::discrete(big_d, gamma).unwrap();
            let rep = fam.validate_assumptions(&sample_z(fam.k()), 1e-10, &quad).unwrap();
            let v = &rep.max_violations;
            let worst = [v.density_ratio, v.mass, v.mean_zero, v.gram, v.alpha_bound].into_iter().fold(0.0, f64::max);
            ensure(rep.pass && worst <= 1e-10, || format!("discrete D = {big_d}, γ = {gamma}: {rep:?}"))?;
            exact_worst = exact_worst.max(worst);
            count += 1;
        }
    }
    let mut gauss_worst = 0.0f64;
    let mut decomp_worst = 0.0f64;
    for d in 1..=6 {
        for gamma in [0.05, 0.1, 0.25, 0.5] {
            let fam = PerturbedFamily::gaussian(d, gamma, 0.5).unwrap();
            let rep = fam.validate_assumptions(&sample_z(d), 1e-6, &quad).unwrap();
            let v = &rep.max_violations;
            let decomp = v.decomposition.ok_or("missing decomposition audit")?;
            let worst = [v.density_ratio, v.mass, v.mean_zero, v.gram, v.alpha_bound, v.split_moments.unwrap_or(0.0)]
                .into_iter()
                .fold(0.0, f64::max);
            ensure(rep.pass && worst <= 1e-6 && decomp <= 1e-10, || format!("Gaussian d = {d}, γ = {gamma}: {rep:?}"))?;
            gauss_worst = gauss_worst.max(worst);
            decomp_worst = decomp_worst.max(decomp);
            count += 1;
        }
    }
    Ok(format!(
        "{count} constructions; exact max violation {exact_worst:.1e}, Gaussian {gauss_worst:.1e}, split identity {decomp_worst:.1e}"
    ))
}

fn criterion_6() -> Check {
    let opts = InstanceOptions { min_n: 2, max_n: 4, ..InstanceOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ns = [0usize; 5];
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let inst = random_instance(10_000 + seed, &opts).unwrap();
        let k = inst.family.k();
        let z = Signs::new(k, rng.random_range(0..1u64 << k)).unwrap();
        let rec = check_cut_paste(&inst.protocol, &inst.family, &z, rng.random_range(0..k)).unwrap();
        ensure(rec.lhs <= rec.rhs + 1e-12 && rec.pass, || format!("{:?}: {rec:?}", inst.spec))?;
        ns[inst.spec.n] += 1;
        worst = worst.max(rec.ratio);
    }
    ensure(ns[2] > 0 && ns[3] > 0 && ns[4] > 0, || format!("n coverage {ns:?}"))?;
    Ok(format!("200 instances (n = 2/3/4: {}/{}/{}), max H²/(7ΣH²) = {worst:.3}", ns[2], ns[3], ns[4]))
}

fn criterion_7() -> Check {
    let mut min_margin = f64::INFINITY;
    for seed in 0..150u64 {
        let inst = random_instance(20_000 + seed, &InstanceOptions::default()).unwrap();
        let tau = inst.family.tau();
        let decoders = [Decoder::Bayes, Decoder::ArgminLp { p: 2.0, estimator: None }, Decoder::ArgminLp { p: 1.0, estimator: None }];
        for dec in decoders {
            let rec = assouad_inequality_check(&inst.protocol, &inst.family, tau, &dec).unwrap();
            for (i, c) in rec.per_coordinate.iter().enumerate() {
                ensure(c.error + 1e-12 >= c.bound, || format!("{:?} {}: coordinate {i} {c:?}", inst.spec, rec.decoder))?;
                min_margin = min_margin.min(c.error - c.bound);
            }
            ensure(rec.pass, || format!("{:?}: {} fails", inst.spec, rec.decoder))?;
        }
    }
    Ok(format!("150 instances × {{Bayes, argmin ℓ2, argmin ℓ1}}, min error − bound = {min_margin:.2e}"))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = f64::NEG_INFINITY;
    for t in 0..100 {
        let d = rng.random_range(1..=6);
        let phi: Vec<Vec<f64>> = sign_vectors(d).unwrap().into_iter().map(|x| x.into_iter().map(f64::from).collect()).collect();
        let p = vec![1.0 / phi.len() as f64; phi.len()];
        let mut a: Vec<f64> = (0..phi.len()).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() * 5.0 }).collect();
        if a.iter().all(|v| *v == 0.0) {
            a[0] = 1.0;
        }
        let rec = measure_change_check(&p, &phi, &a, 1.0).unwrap();
        // recompute both sides directly
        let ea: f64 = p.iter().zip(&a).map(|(p, a)| p * a).sum();
        let lhs: f64 = (0..d).map(|j| (p.iter().zip(&a).zip(&phi).map(|((p, a), f)| p * a * f[j]).sum::<f64>()).powi(2)).sum::<f64>() / (ea * ea);
        let ent: f64 = p.iter().zip(&a).filter(|(_, a)| **a > 0.0).map(|(p, a)| p * a * a.ln()).sum();
        let rhs = 2.0 * (ent / ea - ea.ln());
        ensure((lhs - rec.lhs).abs() < 1e-12 && (rhs - rec.rhs).abs() < 1e-12, || format!("instance {t}: {rec:?} vs ({lhs}, {rhs})"))?;
        ensure(rec.pass && lhs <= rhs + 1e-12, || format!("instance {t}: {lhs} > {rhs}"))?;
        worst = worst.max(lhs - rhs);
    }
    Ok(format!("100 instances, max lhs − rhs = {worst:.3e}"))
}

fn criterion_9() -> Check {
    let qs: Vec<f64> = (1..=9).map(|i| f64::from(i) / 10.0).collect();
    let rec = binomial_moment_check(20, &qs, &[1.0, 2.0, 4.0, 8.0]).map_err(|e| e.to_string())?;
    ensure(rec.pass && rec.entries.len() == 720, || format!("{} entries, pass {}", rec.entries.len(), rec.pass))?;
    // the p = 2 moments are the binomial variance
    for e in rec.entries.iter().filter(|e| e.p == 2.0) {
        let var = f64::from(e.m) * e.q * (1.0 - e.q);
        ensure((e.lhs - var).abs() < 1e-10, || format!("{e:?}: variance {var}"))?;
    }
    Ok(format!("720 (m, q, p) cases, max lhs − rhs = {:.3}", rec.max_slack))
}

fn risk_cfg(kind: FamilyKind, d: usize, s: usize, constraint: Backend, n: Vec<u64>, trials: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: String::new(),
        id: 0,
        family: FamilySpec { kind, d, s, mean: None, signal: None },
        constraint,
        p: LossExponent(2.0),
        n,
        trials,
        seed,
        estimator: EstimatorKind::Protocol,
    }
}

fn spread(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(0.0, f64::max) / xs.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn criterion_10() -> Check {
    let start = Instant::now();
    let eps = 0.5;
    let ns: Vec<u64> = (13..=16).map(|e| 1u64 << e).collect();
    let rep = monte_carlo_risk(&risk_cfg(FamilyKind::Bernoulli, 32, 8, Backend::Ldp { epsilon: eps }, ns, 400, 10))
        .map_err(|e| e.to_string())?;
    let fit = rate_fit(&rep).map_err(|e| e.to_string())?;
    ensure((-0.58..=-0.42).contains(&fit.slope), || format!("slope {:.3}", fit.slope))?;
    let n = 1u64 << 15;
    let mut scaled = Vec::new();
    for d in [16usize, 32, 64] {
        let s = d / 4;
        let r = monte_carlo_risk(&risk_cfg(FamilyKind::Bernoulli, d, s, Backend::Ldp { epsilon: eps }, vec![n], 400, 11))
            .map_err(|e| e.to_string())?;
        scaled.push(r.points[0].risk * (n as f64 * eps * eps / (d * s) as f64).sqrt());
    }
    let sp = spread(&scaled);
    ensure(sp < 1.6, || format!("normalized risks {scaled:?} vary {sp:.3}×"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 600.0, || format!("took {secs:.0}s"))?;
    Ok(format!("slope {:.3} (R² {:.4}), normalized risk over d = 16/32/64 {scaled:.3?} spread {sp:.3}×, {secs:.1}s", fit.slope, fit.r_squared))
}

fn criterion_11() -> Check {
    let start = Instant::now();
    let n = 1u64 << 14;
    let mut risks = Vec::new();
    let mut scaled = Vec::new();
    for b in [1usize, 2, 4] {
        let r = monte_carlo_risk(&risk_cfg(FamilyKind::Bernoulli, 32, 8, Backend::Comm { bits: b }, vec![n], 400, 12))
            .map_err(|e| e.to_string())?;
        let risk = r.points[0].risk;
        risks.push(risk);
        scaled.push(risk * ((n * b as u64) as f64).sqrt());
    }
    ensure(risks.windows(2).all(|w| w[1] < w[0]), || format!("risk not decreasing in b: {risks:?}"))?;
    let sp = spread(&scaled);
    ensure(sp < 1.6, || format!("risk·√(nb) {scaled:?} varies {sp:.3}×"))?;
    let ns: Vec<u64> = (13..=16).map(|e| 1u64 << e).collect();
    let rep = monte_carlo_risk(&risk_cfg(FamilyKind::Bernoulli, 32, 8, Backend::Comm { bits: 2 }, ns, 400, 13))
        .map_err(|e| e.to_string())?;
    let fit = rate_fit(&rep).map_err(|e| e.to_string())?;
    ensure((-0.58..=-0.42).contains(&fit.slope), || format!("slope {:.3}", fit.slope))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 600.0, || format!("took {secs:.0}s"))?;
    Ok(format!("risk over b = 1/2/4 {risks:.4?}, risk·√(nb) spread {sp:.3}×, slope at b = 2 {:.3}, {secs:.1}s", fit.slope))
}

fn criterion_12() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let e = eta();
    let lip = reduction_lipschitz();
    let mut worst = 0.0f64;
    for t in 0..1000 {
        let d = rng.random_range(1..=16);
        let nu: Vec<f64> = (0..d).map(|_| rng.random_range(-e..=e)).collect();
        let nu_hat: Vec<f64> = (0..d).map(|_| rng.random_range(-e..=e)).collect();
        let mu = invert_sign_mean(&nu).map_err(|e| e.to_string())?;
        let mu_hat = invert_sign_mean(&nu_hat).map_err(|e| e.to_string())?;
        for p in [1.0, 2.0, f64::INFINITY] {
            let lhs = lp_loss(&mu, &mu_hat, p).unwrap();
            let base = lp_loss(&nu, &nu_hat, p).unwrap();
            ensure(lhs <= lip * base * (1.0 + 1e-12) + 1e-15, || format!("pair {t}, p = {p}: {lhs} > {lip}·{base}"))?;
            if base > 0.0 {
                worst = worst.max(lhs / base);
            }
        }
    }
    let mut round = 0.0f64;
    for t in 0..1000 {
        let y = if t < 500 { rng.random_range(-e..=e) } else { rng.random_range(-0.999_999..0.999_999) };
        round = round.max((libm::erf(erf_inv(y).unwrap()) - y).abs());
    }
    ensure(round <= 1e-12, || format!("erf_inv round trip error {round:.2e}"))?;

    let n = 1u64 << 15;
    let trials = 300;
    let ldp = Backend::Ldp { epsilon: 1.0 };
    let g = monte_carlo_risk(&risk_cfg(FamilyKind::Gaussian, 16, 4, ldp, vec![n], trials, 14)).map_err(|e| e.to_string())?;
    let mu = g.config.family.mean().unwrap();
    let mut bern = risk_cfg(FamilyKind::Bernoulli, 16, 4, ldp, vec![n], trials, 14);
    bern.family.mean = Some(sign_mean(&mu));
    let b = monte_carlo_risk(&bern).map_err(|e| e.to_string())?;
    let ratio = g.points[0].risk / b.points[0].risk;
    ensure((1.0 / 2.1..=2.1).contains(&ratio), || format!("Gaussian/Bernoulli risk ratio {ratio:.3}"))?;
    Ok(format!(
        "max ℓ(μ)/ℓ(ν) = {worst:.4} ≤ {lip:.4}, round trip {round:.1e}, Gaussian risk {:.4} vs Bernoulli-backend {:.4} (ratio {ratio:.3})",
        g.points[0].risk, b.points[0].risk
    ))
}

/// `P(Bin(m, q) ≤ t)` by the multiplicative pmf recurrence.
fn cdf_by_recurrence(m: u64, q: f64, t: u64) -> f64 {
    let mut pmf = (1.0 - q).powi(m as i32);
    let mut total = pmf;
    for j in 0..t.min(m) {
        pmf *= (m - j) as f64 / (j + 1) as f64 * q / (1.0 - q);
        total += pmf;
    }
    total
}

fn criterion_13() -> Check {
    let mut lines = Vec::new();
    for (d, s) in [(64usize, 32usize), (256, 64), (1024, 64)] {
        let r = sparsity_prior_prob(d, s).map_err(|e| e.to_string())?;
        let tau = s as f64 / (2.0 * d as f64);
        let oracle = cdf_by_recurrence(d as u64, tau, (2.0 * tau * d as f64).round() as u64);
        ensure((oracle - r.prob).abs() < 1e-12, || format!("(d, s) = ({d}, {s}): {} vs recurrence {oracle}", r.prob))?;
        ensure(r.holds && r.prob >= 1.0 - tau / 4.0, || format!("(d, s) = ({d}, {s}): {r:?}"))?;
        lines.push(format!("({d},{s}): {:.6} ≥ {:.6}", r.prob, r.bound));
    }
    Ok(lines.join("; "))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |id: u32| wanted.is_empty() || wanted.contains(&id);
    let certified = (run(1) || run(2)).then(certify_instances);
    let cert = certified.as_ref();
    let criteria: Vec<(u32, &str, Box<dyn Fn() -> Check>)> = vec![
        (1, "contraction bound on random protocols", Box::new(move || criterion_1(cert.unwrap()))),
        (2, "variance and information forms", Box::new(move || criterion_2(cert.unwrap()))),
        (3, "private channels: variance functional", Box::new(criterion_3)),
        (4, "finite channels: variance and information", Box::new(criterion_4)),
        (5, "score assumptions", Box::new(criterion_5)),
        (6, "Hellinger cut-paste", Box::new(criterion_6)),
        (7, "Assouad step", Box::new(criterion_7)),
        (8, "measure change", Box::new(criterion_8)),
        (9, "binomial moments", Box::new(criterion_9)),
        (10, "private protocol rate", Box::new(criterion_10)),
        (11, "bit-limited protocol rate", Box::new(criterion_11)),
        (12, "Gaussian sign reduction", Box::new(criterion_12)),
        (13, "sparse prior concentration", Box::new(criterion_13)),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, f) in criteria.iter().filter(|c| run(c.0)) {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(|| f())).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {msg}");
            }
        }
    }
    if let Some(c) = &certified {
        println!("(random protocol certification shared by criteria 1-2 took {:.1}s)", c.secs);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

