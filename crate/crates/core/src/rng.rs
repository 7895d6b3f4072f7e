//! Seeded random streams.
//!
//! Every run owns its own `ChaCha8Rng`. Batch experiments derive one stream per
//! (grid point, trial) so the result of a trial never depends on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream for trial `trial` of grid point `point`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> SimRng {
    let s = splitmix64(seed ^ splitmix64(point.wrapping_add(0x5851_f42d_4c95_7f2d)) ^ splitmix64(trial));
    seeded(s)
}
