//! Deterministic seed derivation.
//!
//! Every randomized component takes an explicit RNG handle. Substreams are
//! derived from a root seed plus a label path (e.g. `(seed, table, unit)`)
//! with a splitmix64 finalizer, so that two runs with equal seeds and equal
//! call sequences produce identical results on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed with a label path into a new 64-bit seed.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &p in parts {
        s = splitmix64(s ^ splitmix64(p));
    }
    s
}

/// ChaCha8 stream for the given root seed and label path.
pub fn derive_stream(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, parts))
}
