//! Reproducible random streams.
//!
//! Every run draws from a ChaCha8 generator. ChaCha is counter based, so a
//! `(seed, stream)` pair addresses an independent keystream; per-run streams
//! are derived from `(seed, run index, purpose)` and never share state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Separate purposes keep, for example, the initial
/// configuration independent of the clock sequence under the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    InitialSpins = 0,
    Clocks = 1,
    Weights = 2,
    ViralSample = 3,
    Auxiliary = 4,
}

const PURPOSES: u64 = 8;

pub fn stream(seed: u64, run_index: u64, purpose: Purpose) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

/// Uniform draw on `(0, 1]`.
#[inline]
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Exponential variate with the given rate, by inversion. Uses `libm` so the
/// logarithm is bit-identical across platforms.
#[inline]
pub fn exponential(rng: &mut impl Rng, rate: f64) -> f64 {
    -libm::log(open_unit(rng)) / rate
}

/// Fills `out` with independent uniform spins, 64 per generator word.
pub fn fill_spins(rng: &mut impl Rng, out: &mut [i8]) {
    for chunk in out.chunks_mut(64) {
        let bits: u64 = rng.next_u64();
        for (i, s) in chunk.iter_mut().enumerate() {
            *s = if (bits >> i) & 1 == 1 { 1 } else { -1 };
        }
    }
}
