//! Experiment configuration, read from TOML or JSON.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::families::{ProductBernoulli, SphericalGaussian};
use crate::protocols::Backend;

/// Loss exponent `p ≥ 1`; written as a number or as `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossExponent(pub f64);

impl LossExponent {
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Finite exponent used to drive the estimators at `p = ∞`:
    /// `⌈2 log₂ s⌉`, at least 1.
    pub fn surrogate(s: usize) -> f64 {
        (2.0 * (s.max(1) as f64).log2()).ceil().max(1.0)
    }
}

impl fmt::Display for LossExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for LossExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LossExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = LossExponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number ≥ 1 or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<LossExponent, E> {
                if v >= 1.0 {
                    Ok(LossExponent(v))
                } else {
                    Err(E::custom(format!("loss exponent must be ≥ 1, got {v}")))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<LossExponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<LossExponent, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LossExponent, E> {
                match v.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "∞" => Ok(LossExponent(f64::INFINITY)),
                    other => other.parse::<f64>().map_err(E::custom).and_then(|x| {
                        if x.is_finite() {
                            self.visit_f64(x)
                        } else {
                            Err(E::custom(format!("unrecognized loss exponent {v:?}")))
                        }
                    }),
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Bernoulli,
    Gaussian,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::Gaussian => "gaussian",
        }
    }
}

/// Data distribution. The mean is either listed or built from `signal`:
/// `s` evenly spaced coordinates set to `signal` (default 0.5).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub d: usize,
    pub s: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<f64>,
}

pub const DEFAULT_SIGNAL: f64 = 0.5;

impl FamilySpec {
    pub fn mean(&self) -> Result<Vec<f64>> {
        if self.d == 0 || self.s == 0 || self.s > self.d {
            return Err(invalid(format!("need 1 ≤ s ≤ d, got d = {}, s = {}", self.d, self.s)));
        }
        let mean = match (&self.mean, self.signal) {
            (Some(_), Some(_)) => return Err(invalid("give either mean or signal, not both")),
            (Some(m), None) => m.clone(),
            (None, sig) => {
                let v = sig.unwrap_or(DEFAULT_SIGNAL);
                let mut m = vec![0.0; self.d];
                for j in 0..self.s {
                    m[j * self.d / self.s] = v;
                }
                m
            }
        };
        if mean.len() != self.d {
            return Err(invalid(format!("mean has {} coordinates, d = {}", mean.len(), self.d)));
        }
        match self.kind {
            FamilyKind::Bernoulli => {
                ProductBernoulli::with_sparsity(mean.clone(), self.s)?;
            }
            FamilyKind::Gaussian => {
                SphericalGaussian::new(mean.clone())?;
                let nnz = mean.iter().filter(|v| **v != 0.0).count();
                if nnz > self.s {
                    return Err(invalid(format!("mean has {nnz} nonzeros, sparsity bound is {}", self.s)));
                }
            }
        }
        Ok(mean)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// The constrained protocol for the constraint (with the sign reduction
    /// for Gaussian data).
    #[default]
    Protocol,
    /// Unconstrained sample mean of all `n` raw samples.
    EmpiricalMean,
    /// Returns the true mean; a zero-risk reference.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    /// Label mixed into the seed derivation.
    #[serde(default)]
    pub id: u64,
    pub family: FamilySpec,
    pub constraint: Backend,
    pub p: LossExponent,
    pub n: Vec<u64>,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorKind,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(invalid("the n grid must be nonempty and positive"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.p.0 >= 1.0) {
            return Err(invalid(format!("loss exponent must be ≥ 1, got {}", self.p.0)));
        }
        self.family.mean()?;
        match self.constraint {
            Backend::Ldp { epsilon } if !(epsilon > 0.0 && epsilon <= 1.0) => {
                Err(invalid(format!("privacy level must lie in (0, 1], got {epsilon}")))
            }
            Backend::Comm { bits } if bits == 0 || bits > self.family.d => {
                Err(invalid(format!("need 1 ≤ b ≤ d, got b = {bits} with d = {}", self.family.d)))
            }
            _ => Ok(()),
        }
    }

    pub fn constraint_kind(&self) -> &'static str {
        match self.constraint {
            Backend::Ldp { .. } => "ldp",
            Backend::Comm { .. } => "comm",
        }
    }

    pub fn constraint_value(&self) -> f64 {
        match self.constraint {
            Backend::Ldp { epsilon } => epsilon,
            Backend::Comm { bits } => bits as f64,
        }
    }
}

/// A config file: one experiment, or a table with an `experiments` list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub experiments: Vec<ExperimentConfig>,
}

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let plan = if table.contains_key("experiments") {
            table.try_into::<ExperimentPlan>()
        } else {
            table.try_into::<ExperimentConfig>().map(|c| ExperimentPlan { experiments: vec![c] })
        };
        plan.map_err(|e| Error::Parse(e.to_string()))?.checked()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let plan = if value.get("experiments").is_some() {
            serde_json::from_value::<ExperimentPlan>(value)
        } else {
            serde_json::from_value::<ExperimentConfig>(value).map(|c| ExperimentPlan { experiments: vec![c] })
        };
        plan.map_err(|e| Error::Parse(e.to_string()))?.checked()
    }

    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    fn checked(self) -> Result<Self> {
        if self.experiments.is_empty() {
            return Err(invalid("config lists no experiments"));
        }
        for (i, c) in self.experiments.iter().enumerate() {
            c.validate().map_err(|e| invalid(format!("experiment {i} ({}): {e}", c.name)))?;
        }
        Ok(self)
    }
}
