//! Seed derivation.
//!
//! Every random stream in a sweep is derived from one master seed. A stream is
//! addressed by `(repeat, stage, purpose)` and its 64-bit seed is
//!
//! ```text
//! s0 = splitmix64(master ^ 0x6b6c_7265_675f_7365)
//! s1 = splitmix64(s0 ^ repeat)
//! s2 = splitmix64(s1 ^ stage)
//! seed = splitmix64(s2 ^ purpose)
//! ```
//!
//! which then seeds a ChaCha8 generator. The mapping is fixed: changing it
//! changes every published number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    /// Ground-truth generation (reward parameters, context features, theta maps).
    Truth = 1,
    /// Data collection inside an algorithm run.
    Sampling = 2,
    /// Fresh contexts for Monte-Carlo evaluation.
    Evaluation = 3,
    /// Context pools for coverage estimates.
    Coverage = 4,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, repeat: u64, stage: u64, purpose: Purpose) -> u64 {
    let s0 = splitmix64(master ^ 0x6b6c_7265_675f_7365);
    let s1 = splitmix64(s0 ^ repeat);
    let s2 = splitmix64(s1 ^ stage);
    splitmix64(s2 ^ purpose as u64)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, repeat: u64, stage: u64, purpose: Purpose) -> SimRng {
    rng_from_seed(derive_seed(master, repeat, stage, purpose))
}
