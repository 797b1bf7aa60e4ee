//! Order-independent derivation of per-replication random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for the smoke response-time table.
pub const SMOKE_TABLE_TAG: u64 = 0x5340_4b45;
/// Stream tag for empirical response-time PMFs.
pub const SMOKE_PMF_TAG: u64 = 0x504d_4600;
/// Stream tag for the high-precision estimate of the true best smoke design.
pub const SMOKE_TRUTH_TAG: u64 = 0x5452_5554;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of a base seed and the coordinates of one replication.
pub fn mix(base_seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(base_seed), |h, &p| {
        // the multiply keeps a zero part from being a fixed point
        splitmix64(h.wrapping_mul(0x2545_f491_4f6c_dd1d) ^ splitmix64(p))
    })
}

pub fn stream(base_seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base_seed, parts))
}
