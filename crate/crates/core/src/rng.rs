//! Portable, seedable random streams.
//!
//! Every run owns one ChaCha8 generator seeded from a `u64`. Auxiliary
//! consumers (lookahead simulations, landscape probes) never draw from the
//! main stream: they get their own ChaCha stream derived from the run's key,
//! so enabling them cannot perturb the main trajectory.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator every run uses. ChaCha8 output is specified bit-for-bit and
/// does not depend on the platform.
pub type RunRng = ChaCha8Rng;

/// Stream tags for forked generators. The tag occupies the top byte of the
/// ChaCha stream id, the remaining bits identify the fork within its purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    Lookahead = 1,
    Probe = 2,
    Analysis = 3,
}

pub fn seeded(seed: u64) -> RunRng {
    RunRng::seed_from_u64(seed)
}

/// Derives an independent generator from `rng`'s key without advancing it.
pub fn fork(rng: &RunRng, tag: StreamTag, index: u64) -> RunRng {
    let mut forked = RunRng::from_seed(rng.get_seed());
    forked.set_stream(((tag as u64) << 56) | (index & ((1 << 56) - 1)));
    forked
}
