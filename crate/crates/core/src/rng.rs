//! Seeded random streams.
//!
//! Every random choice in the crate goes through ChaCha8 seeded either from a
//! `u64` or from a SHA-256 derivation of `(seed, label)`, so independent
//! actors get independent streams and results do not depend on platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream keyed by `(seed, label)`. Adding a new label never
/// perturbs the draws of an existing one.
pub fn derived(seed: u64, label: &str) -> StreamRng {
    let mut hasher = Sha256::new();
    hasher.update(b"relcrowd-stream\0");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..]);
    ChaCha8Rng::from_seed(key)
}

/// Uniform integer in `0..bound` by rejection on raw 64-bit words.
///
/// Pinned here rather than delegated to `gen_range` so sampled orders stay
/// stable across `rand` releases.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "uniform_below: bound must be positive");
    let zone = (u64::MAX / bound) * bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Uniform `f64` in `[0, 1)` from the top 53 bits of one word.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// In-place Fisher–Yates shuffle driven by [`uniform_below`].
pub fn shuffle<T, R: RngCore + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = uniform_below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
