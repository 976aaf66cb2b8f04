//! Random stream discipline.
//!
//! Every random consumer gets a ChaCha8 generator keyed by the user seed and a
//! 64-bit stream id. Streams with different ids are independent, so a chain,
//! a simulated dataset and each back-simulation replicate can be reproduced
//! on their own, in any order and on any number of threads.
//!
//! Stream ids in use:
//! - `0`: the main MCMC chain of a fit
//! - `1`: simulated data of `simulate`
//! - `2 * rep + 2`, `2 * rep + 3`: data and chain of back-simulation replicate `rep`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

pub const CHAIN_STREAM: u64 = 0;
pub const SIMULATION_STREAM: u64 = 1;

pub fn stream(seed: u64, id: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn replicate_data_stream(rep: usize) -> u64 {
    2 * rep as u64 + 2
}

pub fn replicate_chain_stream(rep: usize) -> u64 {
    2 * rep as u64 + 3
}
