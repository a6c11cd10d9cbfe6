//! Deterministic random substreams.
//!
//! Every Monte Carlo replicate draws from its own ChaCha8 stream, keyed by
//! `(seed, tag)` for the probe and by the replicate index for the stream
//! number. Results therefore do not depend on how replicates are spread
//! over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a probe-level key from a user seed and a textual tag.
pub fn derive_key(seed: u64, tag: &str) -> u64 {
    let mut h = mix64(seed);
    for b in tag.bytes() {
        h = mix64(h ^ u64::from(b));
    }
    h
}

/// Generator for replicate `index` under probe key `key`.
pub fn substream(key: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index);
    rng
}
