//! Named random streams.
//!
//! Every stochastic call draws from a stream keyed by `(master seed, purpose
//! tag, item index)`, so results do not depend on iteration order or on how
//! work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Independent stream for one `(tag, index)` item under `seed`.
pub fn stream(seed: u64, tag: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(fnv1a(tag) ^ splitmix64(index)));
    rng
}

/// Child seed for handing a sub-computation its own master seed.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(fnv1a(tag).wrapping_add(index)))
}
