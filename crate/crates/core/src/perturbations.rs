//! Hard-instance families indexed by sign vectors, their scores, and
//! numerical checks of the structural assumptions they must satisfy.

use serde::{Deserialize, Serialize};

use crate::channels::InputDist;
use crate::error::{invalid, unsupported, Error, Result};
use crate::families::{cell_of, sign_vectors, DiscretePmf, FiniteDist, ProductBernoulli, SphericalGaussian};
use crate::quadrature::GaussHermite;
use crate::rng::StreamKey;
use crate::special::normal_cdf;

/// Largest perturbation dimension for which all sign vectors are enumerated.
pub const MAX_ENUMERATED_K: usize = 24;

/// Sign vector `z ∈ {−1, +1}^k` packed into bits (bit `i` set means `z_i = +1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signs {
    bits: u64,
    k: u32,
}

impl Signs {
    pub fn new(k: usize, bits: u64) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(invalid(format!("sign vector length must be in 1..=64, got {k}")));
        }
        if k < 64 && bits >> k != 0 {
            return Err(invalid("bits set beyond the vector length"));
        }
        Ok(Self { bits, k: k as u32 })
    }

    pub fn from_slice(z: &[i8]) -> Result<Self> {
        let mut bits = 0u64;
        for (i, &v) in z.iter().enumerate() {
            match v {
                1 => bits |= 1 << i,
                -1 => {}
                _ => return Err(invalid(format!("sign entries must be ±1, got {v}"))),
            }
        }
        Self::new(z.len(), bits)
    }

    pub fn all_minus(k: usize) -> Result<Self> {
        Self::new(k, 0)
    }

    pub fn len(&self) -> usize {
        self.k as usize
    }

    pub fn is_empty(&self) -> bool {
        self.k == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> i8 {
        if self.bits >> i & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn to_vec(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// `z` with coordinate `i` negated.
    pub fn flip(&self, i: usize) -> Result<Self> {
        if i >= self.len() {
            return Err(invalid(format!("flip index {i} out of range for length {}", self.k)));
        }
        Ok(Self { bits: self.bits ^ (1 << i), k: self.k })
    }

    /// `z` with coordinate `i` set to `sign`.
    pub fn with(&self, i: usize, sign: i8) -> Self {
        let bits = if sign > 0 { self.bits | 1 << i } else { self.bits & !(1 << i) };
        Self { bits, k: self.k }
    }

    pub fn hamming(&self, other: &Self) -> usize {
        (self.bits ^ other.bits).count_ones() as usize
    }

    /// Every sign vector of length `k`.
    pub fn enumerate(k: usize) -> Result<impl Iterator<Item = Signs>> {
        if k == 0 || k > MAX_ENUMERATED_K {
            return Err(Error::Budget {
                what: "sign vectors",
                needed: 1u128 << k.min(127),
                limit: 1u128 << MAX_ENUMERATED_K,
            });
        }
        Ok((0..1u64 << k).map(move |bits| Signs { bits, k: k as u32 }))
    }

    /// Lexicographic order on the ±1 sequence, with −1 < +1.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_vec().cmp(&other.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Bernoulli,
    Gaussian,
    Discrete,
}

/// A family `{P_z}` with the score representation
/// `dP_{z⊕i}/dP_z = 1 + α_{z,i} φ_{z,i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbedFamily {
    kind: Construction,
    dim: usize,
    gamma: f64,
    tau: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 0.5) {
        return Err(invalid(format!("prior bias must lie in (0, 1/2], got {tau}")));
    }
    Ok(())
}

impl PerturbedFamily {
    /// Product Bernoulli means `(γ/2)(z + 1)` on `d` coordinates.
    pub fn bernoulli(d: usize, gamma: f64, tau: f64) -> Result<Self> {
        if d == 0 || d > 64 {
            return Err(invalid(format!("dimension must be in 1..=64, got {d}")));
        }
        if !(0.0..=0.5).contains(&gamma) {
            return Err(invalid(format!("perturbation size must lie in [0, 1/2], got {gamma}")));
        }
        check_tau(tau)?;
        Ok(Self { kind: Construction::Bernoulli, dim: d, gamma, tau })
    }

    /// Unit-covariance Gaussians with means `γ(z + 1)`.
    pub fn gaussian(d: usize, gamma: f64, tau: f64) -> Result<Self> {
        if d == 0 || d > 64 {
            return Err(invalid(format!("dimension must be in 1..=64, got {d}")));
        }
        if !(0.0..=0.5).contains(&gamma) {
            return Err(invalid(format!("perturbation size must lie in [0, 1/2], got {gamma}")));
        }
        check_tau(tau)?;
        Ok(Self { kind: Construction::Gaussian, dim: d, gamma, tau })
    }

    /// Pmfs on `D` symbols moving mass `γ z_i` between the pair `(2i, 2i+1)`.
    pub fn discrete(alphabet: usize, gamma: f64) -> Result<Self> {
        if alphabet < 2 || alphabet % 2 != 0 || alphabet > 128 {
            return Err(invalid(format!("alphabet size must be even and in 2..=128, got {alphabet}")));
        }
        if !(gamma >= 0.0 && gamma <= 1.0 / (2.0 * alphabet as f64)) {
            return Err(invalid(format!("perturbation size must lie in [0, 1/(2D)], got {gamma}")));
        }
        Ok(Self { kind: Construction::Discrete, dim: alphabet, gamma, tau: 0.5 })
    }

    pub fn kind(&self) -> Construction {
        self.kind
    }

    /// `d` for product families, `D` for the discrete one.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Perturbation dimension.
    pub fn k(&self) -> usize {
        match self.kind {
            Construction::Discrete => self.dim / 2,
            _ => self.dim,
        }
    }

    fn check_z(&self, z: &Signs) -> Result<()> {
        if z.len() != self.k() {
            return Err(invalid(format!("sign vector has length {}, expected {}", z.len(), self.k())));
        }
        Ok(())
    }

    /// Prior mass of `z` under independent `P(z_i = +1) = τ`.
    pub fn prior(&self, z: &Signs) -> f64 {
        let ones = z.ones() as i32;
        self.tau.powi(ones) * (1.0 - self.tau).powi(z.len() as i32 - ones)
    }

    /// Parameter `θ_z`: the mean vector, or the pmf for the discrete family.
    pub fn theta(&self, z: &Signs) -> Vec<f64> {
        let g = self.gamma;
        match self.kind {
            Construction::Bernoulli => (0..self.dim).map(|i| g / 2.0 * f64::from(z.get(i) + 1)).collect(),
            Construction::Gaussian => (0..self.dim).map(|i| g * f64::from(z.get(i) + 1)).collect(),
            Construction::Discrete => {
                let base = 1.0 / self.dim as f64;
                (0..self.dim)
                    .map(|s| {
                        let zi = f64::from(z.get(s / 2));
                        if s % 2 == 0 {
                            base - g * zi
                        } else {
                            base + g * zi
                        }
                    })
                    .collect()
            }
        }
    }

    /// Uniform bound on the coefficients.
    pub fn alpha(&self) -> f64 {
        let g = self.gamma;
        match self.kind {
            Construction::Bernoulli => 2.0 * g,
            Construction::Gaussian => (4.0 * g * g).exp_m1().sqrt(),
            Construction::Discrete => self.discrete_alpha(),
        }
    }

    fn discrete_alpha(&self) -> f64 {
        let d = self.dim as f64;
        let g = self.gamma;
        2.0 * (2.0 * d).sqrt() * g / (1.0 - d * d * g * g).sqrt()
    }

    /// Coefficient `α_{z,i}`.
    pub fn alpha_zi(&self, z: &Signs, i: usize) -> f64 {
        let g = self.gamma;
        match self.kind {
            Construction::Bernoulli => {
                g / (1.0 - g * g * f64::from(1 + z.get(i)) / 2.0).sqrt()
            }
            Construction::Gaussian => self.alpha(),
            Construction::Discrete => self.discrete_alpha(),
        }
    }

    /// Score of a product family as a function of the `i`-th coordinate.
    pub fn phi_coord(&self, zi: i8, xi: f64) -> f64 {
        let g = self.gamma;
        let z = f64::from(zi);
        match self.kind {
            Construction::Bernoulli => {
                let s = (1.0 - g * g * (1.0 + z) / 2.0).sqrt();
                -z * xi * s / (1.0 + g * (1.0 + z) * xi / 2.0)
            }
            Construction::Gaussian => {
                let alpha = self.alpha();
                if alpha == 0.0 {
                    // γ → 0 limit of the normalised score
                    return -z * (xi - g * (1.0 + z));
                }
                (-2.0 * g * z * xi + 2.0 * g * g * z).exp_m1() / alpha
            }
            Construction::Discrete => unreachable!("discrete scores depend on the symbol"),
        }
    }

    /// `φ_{z,i}(x)`; `x` is a vector for product families and `[symbol]`
    /// for the discrete family.
    pub fn phi(&self, z: &Signs, i: usize, x: &[f64]) -> f64 {
        match self.kind {
            Construction::Discrete => {
                let d = self.dim as f64;
                let g = self.gamma;
                let zi = f64::from(z.get(i));
                let sym = x[0] as usize;
                let scale = zi * d.sqrt() / (2.0 * (1.0 - d * d * g * g)).sqrt();
                if sym == 2 * i {
                    scale * (1.0 + d * g * zi)
                } else if sym == 2 * i + 1 {
                    -scale * (1.0 - d * g * zi)
                } else {
                    0.0
                }
            }
            _ => self.phi_coord(z.get(i), x[i]),
        }
    }

    /// Likelihood ratio `dP_{z⊕i}/dP_z(x)` from the densities themselves.
    pub fn density_ratio(&self, z: &Signs, i: usize, x: &[f64]) -> f64 {
        let flipped = z.with(i, -z.get(i));
        match self.kind {
            Construction::Bernoulli => {
                let m0 = self.theta(z)[i];
                let m1 = self.theta(&flipped)[i];
                (1.0 + m1 * x[i]) / (1.0 + m0 * x[i])
            }
            Construction::Gaussian => {
                let m0 = self.theta(z)[i];
                let m1 = self.theta(&flipped)[i];
                (x[i] * (m1 - m0) - (m1 * m1 - m0 * m0) / 2.0).exp()
            }
            Construction::Discrete => {
                let s = x[0] as usize;
                self.theta(&flipped)[s] / self.theta(z)[s]
            }
        }
    }

    /// Law `P_z` in a form channels can average against.
    pub fn input_dist(&self, z: &Signs) -> Result<InputDist> {
        self.check_z(z)?;
        Ok(match self.kind {
            Construction::Bernoulli => InputDist::ProductBernoulli(ProductBernoulli::new(self.theta(z))?),
            Construction::Gaussian => InputDist::Gaussian(SphericalGaussian::new(self.theta(z))?),
            Construction::Discrete => InputDist::Finite((&DiscretePmf::new(self.theta(z))?).into()),
        })
    }

    /// Enumerated support of `P_z` (Bernoulli with d ≤ 20, or discrete).
    pub fn finite_support(&self, z: &Signs) -> Result<FiniteDist> {
        self.check_z(z)?;
        match self.kind {
            Construction::Bernoulli => {
                let pb = ProductBernoulli::new(self.theta(z))?;
                let points = sign_vectors(self.dim)?;
                let probs = points.iter().map(|x| pb.prob(x)).collect();
                FiniteDist::new(points, probs)
            }
            Construction::Discrete => Ok((&DiscretePmf::new(self.theta(z))?).into()),
            Construction::Gaussian => Err(unsupported("Gaussian laws have no finite support")),
        }
    }

    /// Mass and score moment of coordinate `i` on each threshold cell:
    /// `(P(X_i ∈ C), E[φ_{z,i}(X) 1{X_i ∈ C}])`.
    pub fn score_cells(&self, z: &Signs, i: usize, thresholds: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let cells = thresholds.len() + 1;
        let mut mass = vec![0.0; cells];
        let mut moment = vec![0.0; cells];
        match self.kind {
            Construction::Bernoulli => {
                let m = self.theta(z)[i];
                for x in [-1.0, 1.0] {
                    let p = (1.0 + m * x) / 2.0;
                    let c = cell_of(x, thresholds);
                    mass[c] += p;
                    moment[c] += p * self.phi_coord(z.get(i), x);
                }
            }
            Construction::Gaussian => {
                // E[e^{-c X} 1{a < X ≤ b}] = e^{-cm + c²/2}(Φ(b − m + c) − Φ(a − m + c))
                let m = self.theta(z)[i];
                let g = self.gamma;
                let zi = f64::from(z.get(i));
                let c = 2.0 * g * zi;
                let alpha = self.alpha();
                let edges: Vec<f64> = std::iter::once(f64::NEG_INFINITY)
                    .chain(thresholds.iter().copied())
                    .chain(std::iter::once(f64::INFINITY))
                    .collect();
                let tilt = (-c * m + c * c / 2.0 + 2.0 * g * g * zi).exp();
                for (k, w) in edges.windows(2).enumerate() {
                    let p = normal_cdf(w[1] - m) - normal_cdf(w[0] - m);
                    let shifted = normal_cdf(w[1] - m + c) - normal_cdf(w[0] - m + c);
                    mass[k] = p;
                    moment[k] = if alpha == 0.0 { 0.0 } else { (tilt * shifted - p) / alpha };
                }
            }
            Construction::Discrete => return Err(unsupported("discrete symbols have no coordinates")),
        }
        Ok((mass, moment))
    }

    /// Scale `c` in `ℓ_p(θ_z, θ_z') = c·γ·Hamming(z, z')^{1/p}`.
    pub fn lp_gap_scale(&self, p: f64) -> f64 {
        match self.kind {
            Construction::Bernoulli => 1.0,
            Construction::Gaussian => 2.0,
            Construction::Discrete => {
                if p.is_infinite() {
                    2.0
                } else {
                    2.0 * 2f64.powf(1.0 / p)
                }
            }
        }
    }

    /// Largest `δ` with `ℓ_p(θ_z, θ_z') ≥ 4δ (Hamming/(τk))^{1/p}` for all pairs.
    pub fn separation_delta(&self, p: f64) -> f64 {
        let tk = self.tau * self.k() as f64;
        self.lp_gap_scale(p) * self.gamma * tk.powf(1.0 / p) / 4.0
    }

    /// Linear and remainder parts of the Gaussian score.
    pub fn gaussian_split(&self) -> Result<GaussianScoreSplit> {
        if self.kind != Construction::Gaussian {
            return Err(unsupported("score split exists only for the Gaussian construction"));
        }
        Ok(GaussianScoreSplit { fam: self.clone() })
    }

    /// Numerical audit of the score representation.
    pub fn validate_assumptions(&self, zs: &[Signs], tol: f64, quad: &GaussHermite) -> Result<AssumptionReport> {
        for z in zs {
            self.check_z(z)?;
        }
        let k = self.k();
        let alpha = self.alpha();
        let mut v = Violations::default();
        for z in zs {
            for i in 0..k {
                v.alpha_bound = v.alpha_bound.max(self.alpha_zi(z, i).abs() - alpha).max(0.0);
            }
            match self.kind {
                Construction::Gaussian => self.audit_gaussian(z, quad, &mut v),
                _ => self.audit_finite(z, &mut v)?,
            }
        }
        let mut subgaussian = None;
        if self.kind == Construction::Bernoulli {
            let sg = self.subgaussian_proxy(zs);
            v.subgaussian = (sg.proxy - sg.sigma2).max(0.0);
            subgaussian = Some(sg);
        }
        let mut pass = [v.density_ratio, v.mass, v.mean_zero, v.gram, v.alpha_bound]
            .iter()
            .all(|x| *x <= tol);
        pass &= v.subgaussian <= 1e-12;
        if let Some(d) = v.decomposition {
            pass &= d <= 1e-10 && v.split_moments.unwrap_or(0.0) <= tol;
        }
        Ok(AssumptionReport {
            construction: self.kind,
            gamma: self.gamma,
            tol,
            max_violations: v,
            subgaussian,
            pass,
        })
    }

    fn audit_finite(&self, z: &Signs, v: &mut Violations) -> Result<()> {
        let k = self.k();
        let sup = self.finite_support(z)?;
        let pts: Vec<Vec<f64>> = sup.points().iter().map(|x| x.iter().map(|&c| f64::from(c)).collect()).collect();
        for i in 0..k {
            let a = self.alpha_zi(z, i);
            let mut mass = 0.0;
            for (x, p) in pts.iter().zip(sup.probs()) {
                let lhs = self.density_ratio(z, i, x);
                let rhs = 1.0 + a * self.phi(z, i, x);
                v.density_ratio = v.density_ratio.max((lhs - rhs).abs());
                mass += rhs * p;
            }
            v.mass = v.mass.max((mass - 1.0).abs());
        }
        let phis: Vec<Vec<f64>> = pts.iter().map(|x| (0..k).map(|i| self.phi(z, i, x)).collect()).collect();
        for i in 0..k {
            let m: f64 = phis.iter().zip(sup.probs()).map(|(f, p)| f[i] * p).sum();
            v.mean_zero = v.mean_zero.max(m.abs());
            for j in i..k {
                let g: f64 = phis.iter().zip(sup.probs()).map(|(f, p)| f[i] * f[j] * p).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                v.gram = v.gram.max((g - want).abs());
            }
        }
        Ok(())
    }

    fn audit_gaussian(&self, z: &Signs, quad: &GaussHermite, v: &mut Violations) {
        let k = self.k();
        let theta = self.theta(z);
        let split = GaussianScoreSplit { fam: self.clone() };
        let mut means = vec![0.0; k];
        for i in 0..k {
            let m = theta[i];
            let a = self.alpha_zi(z, i);
            let zi = z.get(i);
            let mut e1 = 0.0;
            let mut e2 = 0.0;
            let mut mass = 0.0;
            let (mut xi1, mut xi2, mut psi1, mut psi2) = (0.0, 0.0, 0.0, 0.0);
            let mut worst_split = 0.0f64;
            for (node, w) in quad.nodes().iter().zip(quad.weights()) {
                let x = m + node;
                let f = self.phi_coord(zi, x);
                let mut point = theta.clone();
                point[i] = x;
                let ratio = self.density_ratio(z, i, &point);
                let rhs = 1.0 + a * f;
                v.density_ratio = v.density_ratio.max((ratio - rhs).abs() / ratio.abs().max(1.0));
                mass += w * rhs;
                e1 += w * f;
                e2 += w * f * f;
                let (s, r) = (split.xi_coord(zi, x), split.psi_coord(zi, x));
                xi1 += w * s;
                xi2 += w * s * s;
                psi1 += w * r;
                psi2 += w * r * r;
                let (c_lin, c_rem) = split.coefficients();
                worst_split = worst_split.max((a * f - c_lin * s - c_rem * r).abs());
            }
            v.mass = v.mass.max((mass - 1.0).abs());
            v.mean_zero = v.mean_zero.max(e1.abs());
            v.gram = v.gram.max((e2 - 1.0).abs());
            means[i] = e1;
            v.decomposition = Some(v.decomposition.unwrap_or(0.0).max(worst_split));
            let moments = [xi1.abs(), psi1.abs(), (xi2 - 1.0).abs(), (psi2 - 1.0).abs()];
            let worst = moments.iter().copied().fold(0.0, f64::max);
            v.split_moments = Some(v.split_moments.unwrap_or(0.0).max(worst));
        }
        // off-diagonal Gram entries factor over independent coordinates
        for i in 0..k {
            for j in i + 1..k {
                v.gram = v.gram.max((means[i] * means[j]).abs());
            }
        }
    }

    fn subgaussian_proxy(&self, zs: &[Signs]) -> SubgaussianProxy {
        let d = self.dim;
        let g = self.gamma;
        let sigma2 = (1.0 + g) / (1.0 - g);
        let mut dirs: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
        let key = StreamKey::from_seed(0x5eed_d1c5);
        for r in 0..RANDOM_DIRECTIONS {
            let raw: Vec<f64> = (0..d as u64).map(|j| key.normal(r, j)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            dirs.push(raw.iter().map(|x| x / norm).collect());
        }
        let lambdas: Vec<f64> = (-30..=30).filter(|l| *l != 0).map(|l| f64::from(l) / 10.0).collect();
        let mut proxy = 0.0f64;
        for z in zs {
            let mu = self.theta(z);
            for v in &dirs {
                for &l in &lambdas {
                    let mut log_mgf = 0.0;
                    for i in 0..d {
                        let p_plus = (1.0 + mu[i]) / 2.0;
                        let ep = (l * v[i] * self.phi_coord(z.get(i), 1.0)).exp();
                        let em = (l * v[i] * self.phi_coord(z.get(i), -1.0)).exp();
                        log_mgf += (p_plus * ep + (1.0 - p_plus) * em).ln();
                    }
                    proxy = proxy.max(log_mgf / (l * l / 2.0));
                }
            }
        }
        SubgaussianProxy {
            proxy,
            sigma2,
            lambda_grid: "-3.0..=3.0 step 0.1, zero excluded".into(),
            directions: format!("{d} axes, normalised ones, {RANDOM_DIRECTIONS} seeded random unit vectors"),
        }
    }
}

const RANDOM_DIRECTIONS: u64 = 16;

/// Linear part `ξ` and remainder `ψ` of the Gaussian score,
/// with `αφ = 2γ·ξ + √(e^{4γ²} − 4γ² − 1)·ψ`.
#[derive(Clone, Debug)]
pub struct GaussianScoreSplit {
    fam: PerturbedFamily,
}

impl GaussianScoreSplit {
    /// `(2γ, √(e^{4γ²} − 4γ² − 1))`.
    pub fn coefficients(&self) -> (f64, f64) {
        let g = self.fam.gamma;
        let c = ((4.0 * g * g).exp_m1() - 4.0 * g * g).max(0.0).sqrt();
        (2.0 * g, c)
    }

    pub fn xi_coord(&self, zi: i8, xi: f64) -> f64 {
        let g = self.fam.gamma;
        let z = f64::from(zi);
        z * (g * (z + 1.0) - xi)
    }

    pub fn psi_coord(&self, zi: i8, xi: f64) -> f64 {
        let (c_lin, c_rem) = self.coefficients();
        if c_rem == 0.0 {
            return 0.0;
        }
        let g = self.fam.gamma;
        let z = f64::from(zi);
        let full = (-2.0 * g * z * xi + 2.0 * g * g * z).exp_m1();
        (full - c_lin * self.xi_coord(zi, xi)) / c_rem
    }

    pub fn xi(&self, z: &Signs, i: usize, x: &[f64]) -> f64 {
        self.xi_coord(z.get(i), x[i])
    }

    pub fn psi(&self, z: &Signs, i: usize, x: &[f64]) -> f64 {
        self.psi_coord(z.get(i), x[i])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    /// max |dP_{z⊕i}/dP_z − (1 + α_{z,i} φ_{z,i})| (relative on Gaussian nodes)
    pub density_ratio: f64,
    /// max |Σ (1 + α φ) P_z − 1|
    pub mass: f64,
    pub mean_zero: f64,
    pub gram: f64,
    pub alpha_bound: f64,
    /// excess of the MGF proxy over the stated variance proxy
    pub subgaussian: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_moments: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgaussianProxy {
    /// max over grid of log E[e^{λ⟨φ, v⟩}] / (λ²/2)
    pub proxy: f64,
    pub sigma2: f64,
    pub lambda_grid: String,
    pub directions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub construction: Construction,
    pub gamma: f64,
    pub tol: f64,
    pub max_violations: Violations,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subgaussian: Option<SubgaussianProxy>,
    pub pass: bool,
}

/// Exact `P(Binomial(d, τ) ≤ 2τd)` for `τ = s/(2d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityPrior {
    pub d: usize,
    pub s: usize,
    pub tau: f64,
    pub prob: f64,
    /// `1 − τ/4`
    pub bound: f64,
    /// whether `τd ≥ 4 log₂ d`
    pub regime: bool,
    pub holds: bool,
}

/// `P(Binomial(m, q) ≤ t)` by summing the pmf in log space.
pub fn binomial_cdf(m: u64, q: f64, t: u64) -> f64 {
    if t >= m {
        return 1.0;
    }
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let (lq, lr) = (q.ln(), (-q).ln_1p());
    (0..=t)
        .map(|j| {
            let lp = statrs::function::factorial::ln_binomial(m, j) + j as f64 * lq + (m - j) as f64 * lr;
            lp.exp()
        })
        .sum::<f64>()
        .min(1.0)
}

pub fn sparsity_prior_prob(d: usize, s: usize) -> Result<SparsityPrior> {
    if d == 0 || s == 0 || s > d {
        return Err(invalid(format!("need 1 ≤ s ≤ d, got d={d}, s={s}")));
    }
    let tau = s as f64 / (2.0 * d as f64);
    let cutoff = (2.0 * tau * d as f64 + 1e-9).floor() as u64;
    let prob = binomial_cdf(d as u64, tau, cutoff);
    let bound = 1.0 - tau / 4.0;
    let regime = tau * d as f64 >= 4.0 * (d as f64).log2();
    Ok(SparsityPrior { d, s, tau, prob, bound, regime, holds: prob >= bound })
}
