//! Counter-based random substreams.
//!
//! Every stochastic quantity in the crate is drawn from a stream addressed
//! by `(master seed, domain, index)`. Two streams with different addresses
//! never share state, and a stream's contents do not depend on which thread
//! consumes it or on how many other streams were opened before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator type handed to every simulation routine.
pub type Stream = ChaCha8Rng;

/// Purpose tags keeping the streams of different consumers apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// In-sample innovations `U_1..U_n` of a replication.
    Innovations = 1,
    /// Pre-sample innovations feeding the initial condition.
    PreSample = 2,
    /// Brownian increments of one limit-law path.
    BrownianPath = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the substream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> Stream {
    let mut key = [0u8; 32];
    let mut state = seed ^ splitmix64(domain as u64);
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
