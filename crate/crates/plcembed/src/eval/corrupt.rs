//! Randomized byte corruption for robustness testing.

use rand::Rng;

use crate::corpus::ByteSequence;
use crate::rng::substream;

/// Replaces exactly `floor(fraction * len)` distinct byte positions with
/// uniformly random *different* byte values; the input is untouched.
///
/// Positions come from the prefix of a seeded uniform permutation
/// (Fisher–Yates), with each position's replacement drawn right after it is
/// chosen. Two corruptions of the same input and seed therefore nest: the
/// positions touched at a lower fraction are a subset of those touched at a
/// higher one, and carry the same replacement values.
pub fn corrupt_bytes(b: &ByteSequence, fraction: f64, seed: u64) -> ByteSequence {
    assert!(
        (0.0..=1.0).contains(&fraction),
        "corruption fraction must lie in [0, 1], got {fraction}"
    );
    let len = b.data.len();
    let n = (fraction * len as f64).floor() as usize;
    let mut data = b.data.clone();
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = substream(seed, "byte-corruption", 0);
    for i in 0..n {
        let j = rng.gen_range(i..len);
        order.swap(i, j);
        let pos = order[i];
        // Offsetting by 1..=255 modulo 256 is uniform over the 255 values
        // that differ from the original.
        let offset = rng.gen_range(1..=255u8);
        data[pos] = data[pos].wrapping_add(offset);
    }
    let mut out = ByteSequence::from_bytes(data, b.origin.clone());
    out.original_length = b.original_length;
    out
}
