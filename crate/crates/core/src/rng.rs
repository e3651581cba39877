//! Counter-based random streams.
//!
//! Every random quantity in a run is drawn from a stream keyed by
//! `(master seed, purpose, a, b)`, where `a`/`b` are purpose-specific
//! counters such as `(iteration, device)`. Streams are independent of the
//! order in which they are requested, so extra logging or a different
//! evaluation order never perturbs a trajectory.

use rand_chacha::rand_core::SeedableRng;

pub use rand_chacha::ChaCha8Rng as StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Placement = 1,
    Fading = 2,
    RlcSigns = 3,
    Noise = 4,
    Minibatch = 5,
    Partition = 6,
    Dataset = 7,
    Init = 8,
    Probe = 9,
    Aux = 10,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the key into a 256-bit ChaCha seed.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut state = splitmix64(seed ^ splitmix64(purpose as u64));
    state = splitmix64(state ^ a.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    state = splitmix64(state ^ b.wrapping_mul(0xA076_1D64_78BD_642F));
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    StreamRng::from_seed(bytes)
}
