//! Counter-based random streams.
//!
//! Every random draw in the filter comes from a ChaCha stream keyed by
//! `(seed, step, index, purpose)`. A particle's stream therefore does not
//! depend on which thread propagates it, so serial and parallel runs agree
//! bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Initial = 0,
    Propagate = 1,
    Resample = 2,
}

pub fn stream(seed: u64, step: usize, index: usize, purpose: Purpose) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(step as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    key[24..].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
