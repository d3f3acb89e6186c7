//! Reproducible random streams.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(master_seed, stream_id)`, so results do not depend on how
//! replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by all simulations.
pub type SimRng = ChaCha8Rng;

/// Independent stream number `stream` under `master_seed`.
pub fn stream_rng(master_seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Mixes a domain tag into a seed so that auxiliary simulations (pilot
/// runs, noise envelopes) never share streams with the main ones.
pub fn derive_seed(master_seed: u64, domain: u64) -> u64 {
    let mut z = master_seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
