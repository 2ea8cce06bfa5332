//! Seed derivation. Every stochastic unit of work (one walk, one epoch
//! shuffle, one fold) gets its own generator keyed by a stream tag and
//! coordinates, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream tags keep generators of different subsystems apart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    GlobalOrder = 1,
    GlobalWalk = 2,
    EgoOrder = 3,
    EgoWalk = 4,
    SkipGramInit = 5,
    SkipGramEpoch = 6,
    PvdmInit = 7,
    PvdmEpoch = 8,
    MlpInit = 9,
    MlpEpoch = 10,
    Folds = 11,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream tag and two coordinates.
pub fn derive_seed(seed: u64, stream: Stream, a: u128, b: u64) -> u64 {
    let mut h = splitmix64(seed ^ (stream as u64).rotate_left(56));
    h = splitmix64(h ^ a as u64);
    h = splitmix64(h ^ (a >> 64) as u64);
    splitmix64(h ^ b)
}

pub fn derive_rng(seed: u64, stream: Stream, a: u128, b: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, a, b))
}
