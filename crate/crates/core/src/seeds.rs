//! Deterministic seed streams for parallel Monte Carlo runs.
//!
//! Every stochastic routine in this crate receives its randomness through
//! these helpers, so any run is a pure function of one master seed. Replicate
//! `i` of a study draws from `stream_rng(master, i + 1)`, which is independent
//! of scheduling; nested studies (a bootstrap inside a coverage replication)
//! derive a fresh master with [`child_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// RNG for stream `stream` under `master`. Streams with distinct indices are
/// statistically independent ChaCha streams over the same key.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// Derive a child master seed for nested runs (SplitMix64 mix of
/// `master` and `index`).
pub fn child_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
