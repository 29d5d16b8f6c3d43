//! Deterministic seed derivation.
//!
//! Every stochastic step in the toolkit (sampling, tie-breaks, trial loops,
//! bootstrap resampling) takes a seed derived from one master seed, so a whole
//! experiment replays from a single number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Splitmix64 finalizer; used to decorrelate derived seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a master seed and a label.
pub fn derive(master: u64, label: &str) -> u64 {
    let mut acc = splitmix64(master);
    for b in label.as_bytes() {
        acc = splitmix64(acc ^ u64::from(*b));
    }
    acc
}

/// Derives a per-index seed, e.g. one per Monte-Carlo trial.
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(master, label) ^ splitmix64(index))
}

/// Seeded RNG used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
