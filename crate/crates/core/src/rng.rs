//! Counter-based random streams.
//!
//! Every draw is addressed by `(key, stream, word)`, so any site or replicate
//! can be regenerated in isolation and in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{domain, Result};

/// Offset that maps signed lattice coordinates onto stream word positions.
const COORD_OFFSET: i64 = 1 << 40;

/// Inverse-CDF exponential sample `-ln(u) / rate`.
pub fn sample_exp(rate: f64, u: f64) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return domain(format!("exponential rate must be positive, got {rate}"));
    }
    if !(u > 0.0 && u < 1.0) {
        return domain(format!("uniform variate must lie in (0,1), got {u}"));
    }
    Ok(-u.ln() / rate)
}

/// Maps 64 random bits to the open interval (0, 1) using the top 52 bits.
#[inline]
pub fn unit_open(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

#[inline]
pub(crate) fn exp_from_bits(rate: f64, bits: u64) -> f64 {
    -unit_open(bits).ln() / rate
}

fn derive_key(master_seed: u64, salt: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(salt.as_bytes());
    h.finalize().into()
}

/// Seed for replicate `k` of an experiment; independent of execution order.
pub fn replicate_seed(master_seed: u64, experiment_id: &str, k: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update((experiment_id.len() as u64).to_le_bytes());
    h.update(experiment_id.as_bytes());
    h.update(k.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// One independent sequence of a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    /// Sequential generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(derive_key(self.master_seed, "stream"));
        rng.set_stream(self.stream_id);
        rng
    }

    /// The `counter`-th 64-bit output of the stream.
    pub fn u64_at(&self, counter: u64) -> u64 {
        let mut rng = self.rng();
        rng.set_word_pos(2 * counter as u128);
        rng.next_u64()
    }
}

/// A keyed family of streams addressed by signed coordinates.
#[derive(Clone, Debug)]
pub(crate) struct KeyedStreams {
    base: ChaCha8Rng,
}

impl KeyedStreams {
    pub(crate) fn new(master_seed: u64, salt: &str) -> Self {
        KeyedStreams {
            base: ChaCha8Rng::from_seed(derive_key(master_seed, salt)),
        }
    }

    /// Generator whose next output is the draw at `(stream, coord)`; later
    /// outputs belong to `coord + 1, coord + 2, ...`.
    pub(crate) fn at(&self, stream: i64, coord: i64) -> ChaCha8Rng {
        debug_assert!(coord.abs() < COORD_OFFSET);
        let mut rng = self.base.clone();
        rng.set_stream(stream as u64);
        rng.set_word_pos(2 * (coord + COORD_OFFSET) as u128);
        rng
    }
}
