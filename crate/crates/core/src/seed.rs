//! Deterministic seed splitting.
//!
//! Per-trial and per-stage seeds are derived as
//!
//! ```text
//! derive_seed(master, index, tag) = mix64(mix64(master ^ mix64(index)) ^ tag)
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer. Stage tags are the constants in
//! [`stage`], so two stages of the same trial never share a random stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every random stream in the crate.
pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, index: u64, tag: u64) -> u64 {
    mix64(mix64(master ^ mix64(index)) ^ tag)
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stage tags for [`derive_seed`].
pub mod stage {
    pub const HISTORY: u64 = 0x4849_5354;
    pub const SNAPSHOT: u64 = 0x534e_4150;
    pub const SIGNAL: u64 = 0x5349_474e;
    pub const SENSING: u64 = 0x5345_4e53;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const NETWORK: u64 = 0x4e45_5457;
    pub const UPDATES: u64 = 0x5550_4454;
    pub const ASSIGN: u64 = 0x4153_5347;
}
