//! Deterministic random streams.
//!
//! Every consumer derives its own stream from `(seed, tag)` so that the order in
//! which workers run can never change what they draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used inside the library. Callers may use any other value.
pub mod tags {
    pub const SHUFFLE: u64 = 1;
    pub const KMEANS: u64 = 2;
    pub const SYNTH_CENTERS: u64 = 10;
    pub const SYNTH_POINTS: u64 = 11;
    pub const SYNTH_SHUFFLE: u64 = 12;
    pub const BASELINE: u64 = 20;
}

/// ChaCha8 keyed by `seed`, on stream `tag`. Portable across platforms.
pub fn seeded_rng(seed: u64, stream_tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_tag);
    rng
}

/// Sub-stream for the `index`-th independent job under `tag`.
pub fn job_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    seeded_rng(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15), tag)
}
