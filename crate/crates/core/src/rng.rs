//! Reproducible random streams.
//!
//! Every stochastic task draws from its own ChaCha8 stream keyed by
//! `(master_seed, stream_id)`. Streams never overlap, so realizations can be
//! evaluated in any order or in parallel and still give identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// The stream for task `stream_id` under `master_seed`.
pub fn stream(master_seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// Derives a child master seed, used when one run needs several independent
/// families of streams (e.g. the Hamiltonian ensemble and a bootstrap).
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = master_seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
