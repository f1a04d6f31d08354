//! Seed derivation for independent, order-insensitive random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed, a domain tag and an index.
///
/// Distinct `(domain, index)` pairs give statistically independent streams,
/// so work keyed by index can be scheduled in any order.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(domain)) ^ index)
}

/// Generator for stream `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(seed, domain, index))
}

/// Domain tags. Values are arbitrary but frozen: changing them changes every
/// seeded artifact.
pub mod domain {
    pub const KMEANS_RESTART: u64 = 0x6b6d_6561_6e73;
    pub const RANDOM_COLUMN: u64 = 0x0072_616e_6463_6f6c;
    pub const SYNTH_HOUSEHOLD: u64 = 0x7379_6e74_6868;
    pub const SYNTH_LAYOUT: u64 = 0x7379_6e74_6c61;
    pub const SWEEP_ROW: u64 = 0x7377_6565_7072;
}
