//! Seed derivation and the crate-wide PRNG.
//!
//! Every random stage draws from a ChaCha8 stream whose seed is derived from
//! the top-level seed and a stage label:
//!
//! ```text
//! sub_seed = splitmix64(seed ^ fnv1a64(label))
//! ```
//!
//! Both functions are fixed here, so a stage can be re-run on its own and
//! still see the same stream on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere randomness is needed.
pub type Rng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a hash of `bytes`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |hash, &b| (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the sub-seed for the stage called `label`.
pub fn derive(seed: u64, label: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(label.as_bytes()))
}

/// A generator for the stage called `label`.
pub fn rng_for(seed: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive(seed, label))
}
