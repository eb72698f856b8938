//! Deterministic random streams.
//!
//! Every random decision in the crate is drawn from a [`Stream`] derived from
//! a master seed by a path of integer labels, e.g. `(rep, q, replicate)`.
//! A stream materialises as a ChaCha8 generator keyed by the hashed path, so
//! the draws seen by one replicate never depend on which thread runs it or on
//! how many other replicates ran before it.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to sampling code.
pub type StreamRng = ChaCha8Rng;

/// Well-known labels for the first level below the master seed.
pub mod labels {
    pub const PARENT_GRAPH: u64 = 0x5041_5245_4e54;
    pub const REPLICATE: u64 = 0x5245_504c;
    pub const SPLIT: u64 = 0x5350_4c49_54;
    pub const SELECTION: u64 = 0x5345_4c45_4354;
    pub const COVARIATES: u64 = 0x434f_5641_52;
    pub const MASK: u64 = 0x4d41_534b;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(master_seed: u64) -> Self {
        Self {
            key: mix64(master_seed ^ 0x6a09_e667_f3bc_c908),
        }
    }

    /// Child stream identified by `label`. Derivation is pure.
    pub fn derive(&self, label: u64) -> Self {
        Self {
            key: mix64(self.key.rotate_left(17) ^ mix64(label.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    /// Child stream keyed by the bit pattern of a float (used for `q`).
    pub fn derive_f64(&self, label: f64) -> Self {
        self.derive(label.to_bits())
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut state = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }

    pub fn key(&self) -> u64 {
        self.key
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Bernoulli trial with a precomputed 64-bit threshold; one `next_u64` per draw.
#[derive(Clone, Copy, Debug)]
pub struct Bernoulli {
    threshold: u64,
    always: bool,
}

impl Bernoulli {
    pub fn new(p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        if p >= 1.0 {
            return Self {
                threshold: u64::MAX,
                always: true,
            };
        }
        // 2^64 * p, exact to within one ulp of p.
        let threshold = (p * 18_446_744_073_709_551_616.0) as u64;
        Self {
            threshold,
            always: false,
        }
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        let u = rng.next_u64();
        self.always || u < self.threshold
    }
}
