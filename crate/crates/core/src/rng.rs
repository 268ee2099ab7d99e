//! Counter-based stream derivation: every `(trajectory, mode, step)` triple
//! owns an independent generator derived from the master seed, so results do
//! not depend on scheduling, worker count or Galerkin size.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Reserved trajectory ids for draws outside the per-trajectory noise.
pub const INITIAL_CONDITION_STREAM: u64 = u64::MAX;
pub const PILOT_STREAM: u64 = u64::MAX - 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit key for a stream; distinct triples give unrelated keys.
pub fn stream_key(master: u64, trajectory: u64, mode: u64, step: u64) -> u64 {
    let mut h = splitmix64(master ^ 0x6c65_7679_2d6e_7331);
    h = splitmix64(h ^ trajectory);
    h = splitmix64(h ^ mode.wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(h ^ step.wrapping_mul(0xa076_1d64_78bd_642f))
}

pub fn stream(master: u64, trajectory: u64, mode: u64, step: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_key(master, trajectory, mode, step))
}
