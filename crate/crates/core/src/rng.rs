//! Deterministic random-stream derivation.
//!
//! Every random quantity in the crate is drawn from a generator that is
//! derived from a `(master_seed, path)` pair. The path names the role of
//! the stream (replication, phase, alternative, batch, ...), so results are
//! reproducible regardless of the order in which work is scheduled.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

/// The generator handed to samplers and procedures.
pub type SimRng = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A named random stream: a master seed plus a path of indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub path: Vec<u64>,
}

impl RngStream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            path: Vec::new(),
        }
    }

    /// Stream for a sub-task, obtained by appending `index` to the path.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            master_seed: self.master_seed,
            path,
        }
    }

    /// 256-bit key derived from the seed and the full path.
    fn key(&self) -> [u64; 4] {
        // Mix the depth in so that [a] and [a, 0] never share a prefix state.
        let mut h = splitmix64(self.master_seed ^ (self.path.len() as u64).wrapping_mul(GOLDEN));
        for (depth, &p) in self.path.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
        }
        let mut out = [0u64; 4];
        for (i, w) in out.iter_mut().enumerate() {
            h = splitmix64(h.wrapping_add(i as u64));
            *w = h;
        }
        if out.iter().all(|&w| w == 0) {
            out[0] = GOLDEN;
        }
        out
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SimRng {
        let key = self.key();
        let mut seed = [0u8; 32];
        for (chunk, w) in seed.chunks_exact_mut(8).zip(key) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        SimRng::from_seed(seed)
    }
}

/// Derive the stream addressed by `path` under `seed`.
pub fn derive_stream(seed: u64, path: &[u64]) -> RngStream {
    RngStream {
        master_seed: seed,
        path: path.to_vec(),
    }
}
