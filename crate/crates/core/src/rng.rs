//! Counter-based derivation of independent random streams from one root seed.
//!
//! Every consumer of randomness asks for a stream keyed by
//! `(purpose, a, b, c)`. Streams never share state, so drawing extra numbers
//! in one place cannot shift the numbers seen anywhere else.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Adversary = 2,
    Ensemble = 3,
    Template = 4,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_key(root: u64, purpose: Purpose, a: u64, b: u64, c: u64) -> u64 {
    [purpose as u64, a, b, c]
        .into_iter()
        .fold(splitmix64(root), |h, word| splitmix64(h ^ splitmix64(word)))
}

pub fn substream(root: u64, purpose: Purpose, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(root, purpose, a, b, c))
}
