//! Deterministic random streams.
//!
//! Every stochastic component draws from a [`Stream`], a 256-bit key that
//! spawns independent child streams by name and index. Children derived
//! from the same key with the same path are identical across runs, threads
//! and platforms, so any piece of work can be handed its own stream up
//! front and executed in any order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A derivable random-stream key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stream {
    key: [u64; 4],
}

impl Stream {
    /// Root stream for a run seed.
    pub fn root(seed: u64) -> Self {
        let mut state = seed ^ GOLDEN;
        let key = [
            splitmix(&mut state),
            splitmix(&mut state),
            splitmix(&mut state),
            splitmix(&mut state),
        ];
        Stream { key }
    }

    /// Child stream addressed by a tag and an index path.
    ///
    /// Distinct `(tag, indices)` pairs yield statistically independent
    /// streams; the derivation is order-free, so callers may spawn children
    /// in any order (or in parallel) without affecting the result.
    pub fn child(&self, tag: &str, indices: &[u64]) -> Self {
        let mut state = self.key[0];
        for &k in &self.key[1..] {
            state ^= splitmix(&mut state) ^ k;
        }
        for byte in tag.as_bytes() {
            state = state.wrapping_mul(0x100_0000_01b3) ^ u64::from(*byte);
        }
        let mut mix = state;
        for &idx in indices {
            mix ^= splitmix(&mut mix) ^ idx.wrapping_mul(GOLDEN);
        }
        let key = [
            splitmix(&mut mix),
            splitmix(&mut mix),
            splitmix(&mut mix),
            splitmix(&mut mix),
        ];
        Stream { key }
    }

    /// Materialize the stream as a generator.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (i, word) in self.key.iter().enumerate() {
            seed[i * 8..(i + 1) * 8].copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
