//! Counter-based random streams.
//!
//! A 64-bit master seed expands into a tree of ChaCha8 keys. Each key owns
//! 2^64 independent streams (one per player), and every stream is randomly
//! addressable by word position, so the value a player draws for coordinate
//! `j` does not depend on which other coordinates were read, in what order,
//! or on which thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::RngCore;

/// Words reserved per coordinate inside a player's stream.
const WORDS_PER_COORD: u128 = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn from_seed(master: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self { key }
    }

    /// Child key for a labelled sub-experiment (experiment id, grid point,
    /// trial, ...). Distinct labels give unrelated keys.
    pub fn derive(&self, label: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        // stream u64::MAX is reserved for derivation so it never collides
        // with a player stream of the parent
        rng.set_stream(u64::MAX);
        rng.set_word_pos(u128::from(label) * 8);
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self { key }
    }

    /// Sequential stream for one player.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(index);
        rng
    }

    /// Two uniform words reserved for `(player, coord)`.
    pub fn words(&self, player: u64, coord: u64) -> (u64, u64) {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(player);
        rng.set_word_pos(u128::from(coord) * WORDS_PER_COORD);
        (rng.next_u64(), rng.next_u64())
    }

    /// Uniform in [0, 1) for `(player, coord)`.
    pub fn uniform(&self, player: u64, coord: u64) -> f64 {
        unit_f64(self.words(player, coord).0)
    }

    /// Standard normal for `(player, coord)` (Box–Muller on the reserved pair).
    pub fn normal(&self, player: u64, coord: u64) -> f64 {
        let (a, b) = self.words(player, coord);
        let u1 = 1.0 - unit_f64(a); // (0, 1]
        let u2 = unit_f64(b);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
