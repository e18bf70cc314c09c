//! Deterministic derivation of independent RNG seeds from one global seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `stream` under `base`. Distinct streams give unrelated
/// seeds; the result depends only on the two inputs.
pub fn derive(base: u64, stream: u64) -> u64 {
    mix(mix(base) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Seed derived from a path of stream indices.
pub fn derive_path(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |acc, &s| derive(acc, s))
}

/// Stable 64-bit stream id for a string label.
pub fn label_stream(label: &str) -> u64 {
    label.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}
