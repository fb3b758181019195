//! Seeded random streams.
//!
//! Every consumer draws from ChaCha8 keyed by the run seed, with a 64-bit
//! stream id made of a [`Stream`] tag (high 16 bits) and an index (low 48
//! bits). Components can therefore be re-seeded or run in parallel without
//! disturbing each other's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum Stream {
    /// Random codebook generation; index = codebook number.
    Codebook = 1,
    /// Source and side-information sampling; index = trial.
    Source = 2,
    /// Likelihood-encoder randomness; index = trial.
    Encoder = 3,
    /// Random candidates in the less-noisy falsifier; index = candidate.
    Falsifier = 4,
    /// Random lattice subsampling in the region optimizer.
    Lattice = 5,
}

const INDEX_BITS: u32 = 48;

/// Generator for `(seed, stream, index)`.
pub fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = index & ((1u64 << INDEX_BITS) - 1);
    rng.set_stream(((stream as u64) << INDEX_BITS) | index);
    rng
}
