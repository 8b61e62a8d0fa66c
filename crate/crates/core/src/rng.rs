//! Seeded, splittable random streams.
//!
//! Every stochastic operation in the crate derives its generator from an
//! explicit `u64` seed plus a purpose label and an index, so runs are
//! reproducible and independent draws never share a stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive an independent generator for `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(label) ^ index.rotate_left(17));
    rng
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
