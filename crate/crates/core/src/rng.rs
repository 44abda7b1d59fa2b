//! Named random streams derived from one master seed.
//!
//! Every stream is a ChaCha8 generator keyed by `(master seed, purpose)` with
//! the ChaCha stream id set to an index (a patch id, an episode number, ...).
//! Results therefore do not depend on the order in which streams are used or
//! on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Intra-patch SDE noise.
    Simulation,
    /// Exponential thresholds of the patch arrival process.
    Arrivals,
    /// Policy sampling and minibatch shuffling.
    Policy,
    /// Network initialisation.
    Init,
    /// Synthetic data generation.
    DataGen,
    /// Per-episode environment seeds.
    Episodes,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Simulation => 0x5349_4d55,
            Stream::Arrivals => 0x4152_5256,
            Stream::Policy => 0x504f_4c49,
            Stream::Init => 0x494e_4954,
            Stream::DataGen => 0x4441_5441,
            Stream::Episodes => 0x4550_4953,
        }
    }
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic child seed for `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

pub fn stream(master: u64, purpose: Stream, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut z = master ^ purpose.tag().rotate_left(32);
    for chunk in key.chunks_exact_mut(8) {
        z = mix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
