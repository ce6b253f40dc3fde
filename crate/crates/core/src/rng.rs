//! Seeded random streams.
//!
//! Every replica owns a ChaCha stream keyed by the master seed and selected by
//! a stream id derived from the replica coordinates, so results do not depend
//! on the order in which replicas are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type OdpoRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes an ordered list of coordinates into a single stream id.
pub fn stream_id(coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(0x6a09_e667_f3bc_c909, |acc, &c| mix64(acc ^ mix64(c)))
}

/// Generator for the stream identified by `coords` under `master_seed`.
pub fn stream(master_seed: u64, coords: &[u64]) -> OdpoRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(coords));
    rng
}

/// Per-replica seed reported in output rows.
pub fn derived_seed(master_seed: u64, coords: &[u64]) -> u64 {
    mix64(master_seed ^ stream_id(coords))
}
