//! Where players' samples come from: live draws or a recorded replay.

use crate::error::{Error, Result};
use crate::families::{ProductBernoulli, SphericalGaussian};
use crate::rng::StreamKey;

/// Random access to player samples. Player `p` only ever reads the
/// coordinates it reports, so a source never materializes a full vector.
pub trait SampleSource: Sync {
    fn dim(&self) -> usize;

    /// Number of distinct players available (`None` when unbounded).
    fn capacity(&self) -> Option<u64>;

    /// Coordinate `j` of player `player`'s sample.
    fn value(&self, player: u64, j: usize) -> f64;
}

impl<S: SampleSource + ?Sized> SampleSource for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn capacity(&self) -> Option<u64> {
        (**self).capacity()
    }

    fn value(&self, player: u64, j: usize) -> f64 {
        (**self).value(player, j)
    }
}

/// Fresh draws from a product of ±1 coordinates.
#[derive(Clone, Debug)]
pub struct LiveBernoulli {
    pub dist: ProductBernoulli,
    pub key: StreamKey,
}

impl SampleSource for LiveBernoulli {
    fn dim(&self) -> usize {
        self.dist.dim()
    }

    fn capacity(&self) -> Option<u64> {
        None
    }

    fn value(&self, player: u64, j: usize) -> f64 {
        f64::from(self.dist.coordinate(&self.key, player, j))
    }
}

/// Fresh draws from `N(μ, I)`.
#[derive(Clone, Debug)]
pub struct LiveGaussian {
    pub dist: SphericalGaussian,
    pub key: StreamKey,
}

impl SampleSource for LiveGaussian {
    fn dim(&self) -> usize {
        self.dist.dim()
    }

    fn capacity(&self) -> Option<u64> {
        None
    }

    fn value(&self, player: u64, j: usize) -> f64 {
        self.dist.coordinate(&self.key, player, j)
    }
}

/// Replaces every coordinate by its sign, reading 0 as −1.
#[derive(Clone, Debug)]
pub struct SignReduced<S>(pub S);

impl<S: SampleSource> SampleSource for SignReduced<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn capacity(&self) -> Option<u64> {
        self.0.capacity()
    }

    fn value(&self, player: u64, j: usize) -> f64 {
        sign(self.0.value(player, j))
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Recorded samples, one player per record.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySource {
    dim: usize,
    records: Vec<Vec<f64>>,
}

impl ReplaySource {
    pub fn new(records: Vec<Vec<f64>>) -> Result<Self> {
        let dim = records.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::Parse("replay needs at least one nonempty record".into()));
        }
        for (i, r) in records.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Parse(format!("record {i} has {} coordinates, expected {dim}", r.len())));
            }
            if let Some(v) = r.iter().find(|v| !v.is_finite()) {
                return Err(Error::Parse(format!("record {i} has non-finite value {v}")));
            }
        }
        Ok(Self { dim, records })
    }

    /// Parses JSON Lines: each nonblank line is an array of numbers.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<Vec<f64>>(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(records)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("finite floats serialize"));
            out.push('\n');
        }
        out
    }

    /// Records the first `players` samples of another source.
    pub fn record(src: &dyn SampleSource, players: u64) -> Result<Self> {
        if src.capacity().is_some_and(|c| c < players) {
            return Err(Error::Configuration(format!("source holds fewer than {players} players")));
        }
        Self::new((0..players).map(|p| (0..src.dim()).map(|j| src.value(p, j)).collect()).collect())
    }

    pub fn records(&self) -> &[Vec<f64>] {
        &self.records
    }
}

impl SampleSource for ReplaySource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn capacity(&self) -> Option<u64> {
        Some(self.records.len() as u64)
    }

    fn value(&self, player: u64, j: usize) -> f64 {
        self.records[player as usize][j]
    }
}
