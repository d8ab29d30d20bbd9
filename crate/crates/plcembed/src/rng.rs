//! Deterministic seed derivation.
//!
//! Every randomized component draws from a ChaCha stream derived from a user
//! seed, a domain label, and an index. Derived streams are independent, so
//! per-item work (corpus programs, corruption of test files) can run in any
//! order, or in parallel, without changing the emitted bytes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; mixes a word into a well-distributed 64-bit value.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a domain label, stable across runs (no `DefaultHasher`).
fn domain_tag(domain: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a
    for b in domain.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG for `(seed, domain, index)`, independent of all other substreams.
pub fn substream(seed: u64, domain: &str, index: u64) -> ChaCha8Rng {
    let a = mix(seed ^ domain_tag(domain));
    let b = mix(a ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&a.to_le_bytes());
    key[8..16].copy_from_slice(&b.to_le_bytes());
    key[16..24].copy_from_slice(&mix(b).to_le_bytes());
    key[24..].copy_from_slice(&mix(b ^ 0x5555_5555_5555_5555).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
