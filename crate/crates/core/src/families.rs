//! Parametric families, sampling and ℓp losses.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::StreamKey;
use crate::special::normal_cdf;

/// Loss exponent `p ∈ [1, ∞]`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("loss exponent must be in [1, inf], got {p}")));
    }
    Ok(())
}

/// `(Σ|a_i − b_i|^p)^{1/p}`, or the max gap when `p` is infinite.
pub fn lp_loss(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch {} vs {}", a.len(), b.len())));
    }
    let gaps = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    if p.is_infinite() {
        return Ok(gaps.fold(0.0, f64::max));
    }
    // scale by the max gap so large p does not underflow
    let gaps: Vec<f64> = gaps.collect();
    let top = gaps.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = gaps.iter().map(|g| (g / top).powf(p)).sum();
    Ok(top * s.powf(1.0 / p))
}

fn check_means(mean: &[f64]) -> Result<()> {
    if mean.is_empty() {
        return Err(invalid("dimension must be positive"));
    }
    if let Some(m) = mean.iter().find(|m| !(m.abs() <= 1.0)) {
        return Err(invalid(format!("mean entries must lie in [-1, 1], got {m}")));
    }
    Ok(())
}

fn sparsity(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}

/// Index of the cell of `x` among sorted `thresholds`: the number of
/// thresholds strictly below `x`.
pub fn cell_of(x: f64, thresholds: &[f64]) -> usize {
    thresholds.partition_point(|t| *t < x)
}

/// Product of ±1 coordinates with `P(X_j = +1) = (1 + μ_j)/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductBernoulli {
    mean: Vec<f64>,
    sparsity: Option<usize>,
}

impl ProductBernoulli {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        check_means(&mean)?;
        Ok(Self { mean, sparsity: None })
    }

    pub fn with_sparsity(mean: Vec<f64>, s: usize) -> Result<Self> {
        check_means(&mean)?;
        let nnz = sparsity(&mean);
        if nnz > s {
            return Err(invalid(format!("mean has {nnz} nonzeros, sparsity bound is {s}")));
        }
        Ok(Self { mean, sparsity: Some(s) })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sparsity(&self) -> Option<usize> {
        self.sparsity
    }

    pub fn prob_plus(&self, j: usize) -> f64 {
        (1.0 + self.mean[j]) / 2.0
    }

    /// Probability of the ±1 point `x`.
    pub fn prob(&self, x: &[i32]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &v)| if v > 0 { self.prob_plus(j) } else { 1.0 - self.prob_plus(j) })
            .product()
    }

    /// Cell probabilities of coordinate `j` against sorted thresholds.
    pub fn coord_cell_probs(&self, j: usize, thresholds: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; thresholds.len() + 1];
        out[cell_of(-1.0, thresholds)] += 1.0 - self.prob_plus(j);
        out[cell_of(1.0, thresholds)] += self.prob_plus(j);
        out
    }

    /// Coordinate `j` of player `player`'s sample.
    pub fn coordinate(&self, key: &StreamKey, player: u64, j: usize) -> i8 {
        if key.uniform(player, j as u64) < self.prob_plus(j) {
            1
        } else {
            -1
        }
    }

    pub fn draw(&self, key: &StreamKey, player: u64) -> Vec<i8> {
        (0..self.dim()).map(|j| self.coordinate(key, player, j)).collect()
    }

    pub fn sample(&self, n: usize, key: &StreamKey) -> Vec<Vec<i8>> {
        (0..n as u64).map(|i| self.draw(key, i)).collect()
    }
}

/// `N(μ, I_d)` with `‖μ‖_∞ ≤ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphericalGaussian {
    mean: Vec<f64>,
}

impl SphericalGaussian {
    pub fn new(mean: Vec<f64>) -> Result<Self> {
        check_means(&mean)?;
        Ok(Self { mean })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn coord_cell_probs(&self, j: usize, thresholds: &[f64]) -> Vec<f64> {
        let m = self.mean[j];
        let mut cdf: Vec<f64> = thresholds.iter().map(|t| normal_cdf(t - m)).collect();
        cdf.insert(0, 0.0);
        cdf.push(1.0);
        cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }

    pub fn coordinate(&self, key: &StreamKey, player: u64, j: usize) -> f64 {
        self.mean[j] + key.normal(player, j as u64)
    }

    pub fn draw(&self, key: &StreamKey, player: u64) -> Vec<f64> {
        (0..self.dim()).map(|j| self.coordinate(key, player, j)).collect()
    }

    pub fn sample(&self, n: usize, key: &StreamKey) -> Vec<Vec<f64>> {
        (0..n as u64).map(|i| self.draw(key, i)).collect()
    }
}

/// Probability mass function over symbols `0..D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePmf {
    probs: Vec<f64>,
}

impl DiscretePmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("alphabet must be nonempty"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(invalid(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn draw(&self, key: &StreamKey, player: u64) -> usize {
        let u = key.uniform(player, 0);
        let mut acc = 0.0;
        for (s, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return s;
            }
        }
        // rounding left a sliver above the cumulative sum
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    pub fn sample(&self, n: usize, key: &StreamKey) -> Vec<usize> {
        (0..n as u64).map(|i| self.draw(key, i)).collect()
    }
}

/// Finitely supported distribution over integer-vector points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDist {
    points: Vec<Vec<i32>>,
    probs: Vec<f64>,
}

impl FiniteDist {
    pub fn new(points: Vec<Vec<i32>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(invalid("points and probabilities must be nonempty and aligned"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid("probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self { points, probs })
    }

    /// Uniform over ±1 vectors of length `d`, in lexicographic order (−1 first).
    pub fn sign_cube(d: usize) -> Result<Self> {
        let points = sign_vectors(d)?;
        let p = 1.0 / points.len() as f64;
        let probs = vec![p; points.len()];
        Self::new(points, probs)
    }

    pub fn points(&self) -> &[Vec<i32>] {
        &self.points
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `λ·self + (1 − λ)·other`; both must share the same point list.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.points != other.points {
            return Err(invalid("mixture components must share support ordering"));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::new(self.points.clone(), probs)
    }
}

impl From<&ProductBernoulli> for Option<FiniteDist> {
    fn from(pb: &ProductBernoulli) -> Self {
        let points = sign_vectors(pb.dim()).ok()?;
        let probs = points.iter().map(|x| pb.prob(x)).collect();
        FiniteDist::new(points, probs).ok()
    }
}

impl From<&DiscretePmf> for FiniteDist {
    fn from(pmf: &DiscretePmf) -> Self {
        Self {
            points: (0..pmf.size() as i32).map(|s| vec![s]).collect(),
            probs: pmf.probs.clone(),
        }
    }
}

/// All ±1 vectors of length `d` (d ≤ 20), lexicographic with −1 first.
pub fn sign_vectors(d: usize) -> Result<Vec<Vec<i32>>> {
    if d == 0 || d > 20 {
        return Err(invalid(format!("sign cube dimension must be in 1..=20, got {d}")));
    }
    Ok((0..1usize << d)
        .map(|m| (0..d).map(|j| if m >> (d - 1 - j) & 1 == 1 { 1 } else { -1 }).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_basics() {
        assert_eq!(lp_loss(&[0.3, -0.2], &[0.3, -0.2], 2.0).unwrap(), 0.0);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((lp_loss(&[1.0, 0.0], &[0.0, 0.0], p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((lp_loss(&[3.0, 4.0], &[0.0, 0.0], 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(lp_loss(&[1.0], &[0.0], 0.5).is_err());
        assert!(lp_loss(&[1.0], &[0.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(ProductBernoulli::new(vec![1.2]).is_err());
        assert!(ProductBernoulli::with_sparsity(vec![0.5, 0.5, 0.0], 1).is_err());
        assert!(ProductBernoulli::with_sparsity(vec![0.5, 0.0, 0.0], 1).is_ok());
        assert!(SphericalGaussian::new(vec![]).is_err());
        assert!(DiscretePmf::new(vec![0.5, 0.6]).is_err());
        assert!(DiscretePmf::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn degenerate_samples() {
        let key = StreamKey::from_seed(5);
        let pb = ProductBernoulli::new(vec![1.0; 4]).unwrap();
        assert!(pb.sample(200, &key).iter().all(|x| x.iter().all(|&v| v == 1)));
        let pmf = DiscretePmf::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(pmf.sample(200, &key).iter().all(|&s| s == 0));
    }

    #[test]
    fn gaussian_sample_mean() {
        let key = StreamKey::from_seed(9);
        let g = SphericalGaussian::new(vec![0.0; 3]).unwrap();
        let n = 100_000;
        let xs = g.sample(n, &key);
        for j in 0..3 {
            let m = xs.iter().map(|x| x[j]).sum::<f64>() / n as f64;
            assert!(m.abs() < 0.02, "{m}");
        }
    }

    #[test]
    fn cell_probabilities() {
        let pb = ProductBernoulli::new(vec![0.5]).unwrap();
        assert_eq!(pb.coord_cell_probs(0, &[0.0]), vec![0.25, 0.75]);
        let g = SphericalGaussian::new(vec![0.0]).unwrap();
        let c = g.coord_cell_probs(0, &[-1.0, 0.0, 1.0]);
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((c[1] - 0.341_344_746_068_542_9).abs() < 1e-12);
        assert_eq!(cell_of(0.0, &[0.0]), 0);
    }

    #[test]
    fn sign_cube_order() {
        let v = sign_vectors(2).unwrap();
        assert_eq!(v, vec![vec![-1, -1], vec![-1, 1], vec![1, -1], vec![1, 1]]);
        let pb = ProductBernoulli::new(vec![0.2, -0.4]).unwrap();
        let fd: Option<FiniteDist> = (&pb).into();
        assert!((fd.unwrap().probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
