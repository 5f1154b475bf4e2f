//! Deterministic sub-seed derivation.
//!
//! Every source of randomness in the crate is keyed by a single top-level
//! seed plus a path of indices (class, aspect, repetition, restart, ...).
//! Deriving sub-seeds through a fixed mixing function keeps independent
//! pipeline stages decoupled: changing how many draws one stage consumes
//! never shifts the stream seen by another.

/// SplitMix64 finalizer; a well-distributed 64-bit mix.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a sub-seed from `base` and a path of indices.
///
/// The derivation is order-sensitive: `derive_seed(s, &[1, 2])` and
/// `derive_seed(s, &[2, 1])` differ.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut acc = mix(base);
    for &part in path {
        acc = mix(acc ^ mix(part));
    }
    acc
}
