//! Reproducible random streams.
//!
//! Every realization draws from a ChaCha8 stream. The 256-bit key is derived
//! from a 64-bit master seed by four successive SplitMix64 outputs written
//! little-endian, and trial `i` of an experiment uses ChaCha stream number
//! `i` under that key. Any trial can therefore be replayed in isolation, and
//! results do not depend on how trials are scheduled across threads.
//!
//! Uniforms are built from the top 53 bits of `next_u64` as
//! `(k + 0.5) * 2^-53`, which lies strictly inside (0, 1). Exponentials use
//! the inverse CDF `-ln(u)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of SplitMix64. Returns the output and advances `state`.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded generator for a single realization or stream of realizations.
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    /// Stream 0 under `seed`.
    pub fn new(seed: u64) -> Self {
        Self::for_trial(seed, 0)
    }

    /// The generator owned by trial `trial` of an experiment seeded with
    /// `master_seed`.
    pub fn for_trial(master_seed: u64, trial: u64) -> Self {
        let mut state = master_seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(trial);
        Self { inner }
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn uniform_open01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    ((rng.next_u64() >> 11) as f64 + 0.5) * SCALE
}

/// Exp(1) draw by inversion; always strictly positive.
#[inline]
pub fn standard_exp<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    -uniform_open01(rng).ln()
}

/// Exp(rate) draw. `rate` must be positive.
#[inline]
pub fn exponential<T: Real, R: RngCore + ?Sized>(rng: &mut R, rate: T) -> T {
    T::lit(standard_exp(rng)) / rate
}

/// Uniform index in `0..len` by Lemire's multiply-and-reject method (unbiased).
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    assert!(len > 0, "uniform_index on an empty range");
    let range = len as u64;
    let threshold = range.wrapping_neg() % range;
    loop {
        let m = (rng.next_u64() as u128) * (range as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as usize;
        }
    }
}
