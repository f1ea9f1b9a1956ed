//! Counter-based seeding: every random stream is keyed by
//! `(seed, stream, index)`, so frames can be generated in any order or in
//! parallel without changing the output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers, one per independent noise source.
pub mod stream {
    pub const TRAFFIC: u64 = 1;
    pub const CAMERA: u64 = 2;
    pub const LIDAR_CLOUD: u64 = 3;
    pub const LIDAR_DETECTIONS: u64 = 4;
    pub const RANSAC: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A 64-bit seed derived from `(seed, stream, index)`, for APIs that take
/// a plain seed rather than a generator.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn keyed_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}
