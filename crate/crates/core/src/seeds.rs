//! Counter-based seed derivation.
//!
//! Every stochastic unit of work (a J realization, a trajectory, a bootstrap
//! run) gets its own seed derived from the master seed and its index path, so
//! results never depend on execution order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with an index path into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &idx| splitmix64(acc ^ splitmix64(idx.wrapping_add(1))))
}

/// Domain tags keep the streams of different subsystems apart.
pub mod stream {
    pub const LAYOUT: u64 = 1;
    pub const TRAJECTORY: u64 = 2;
    pub const SEMICLASSICAL: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const FLOOR: u64 = 5;
    pub const RETRY: u64 = 6;
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
