//! Seeded, splittable randomness.
//!
//! A run seed plus a 64-bit stream id selects one ChaCha12 keystream. Child
//! streams are derived by mixing a tag into the parent's stream id, so
//! `(seed, epoch, purpose)` always maps to the same independent keystream
//! no matter how many other streams were consumed before it.
//!
//! All normal variates come from the Marsaglia polar method implemented
//! here. Reproducibility is bit-exact only as long as this one method is
//! used, so do not swap in another sampler for convenience.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Stream purposes. Mixed into the stream id so that different consumers of
/// the same run seed never overlap.
pub mod purpose {
    pub const PERMUTATION: u64 = 0x5045_524d;
    pub const PUBLIC_ORDER: u64 = 0x5055_424f;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const DATA: u64 = 0x4441_5441;
    pub const DISSIMILARITY: u64 = 0x4449_5353;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A `(seed, stream_id)` pair naming one keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child stream keyed by `tag`. Deterministic and order independent.
    pub fn substream(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(1))),
        }
    }

    /// Start reading the keystream from the beginning.
    pub fn generator(&self) -> StreamRng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut inner = ChaCha12Rng::from_seed(key);
        inner.set_stream(self.stream_id);
        StreamRng { inner, spare: None }
    }
}

/// Generator reading one keystream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha12Rng,
    spare: Option<f64>,
}

impl StreamRng {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal variate via the Marsaglia polar method.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * factor);
                return u * factor;
            }
        }
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Isotropic Gaussian noise `N(0, sigma² I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianNoiseSpec<F> {
    pub sigma: F,
}

impl<F: Scalar> GaussianNoiseSpec<F> {
    pub fn new(sigma: F) -> Self {
        debug_assert!(sigma >= F::zero());
        Self { sigma }
    }
}

/// `d` independent draws from `N(0, sigma²)`. Zero sigma yields exact zeros
/// and consumes no randomness.
pub fn sample_gaussian<F: Scalar>(spec: GaussianNoiseSpec<F>, d: usize, rng: &mut StreamRng) -> Vec<F> {
    let mut out = vec![F::zero(); d];
    fill_gaussian(spec, &mut out, rng);
    out
}

pub(crate) fn fill_gaussian<F: Scalar>(spec: GaussianNoiseSpec<F>, out: &mut [F], rng: &mut StreamRng) {
    if spec.sigma == F::zero() {
        out.iter_mut().for_each(|v| *v = F::zero());
        return;
    }
    for v in out.iter_mut() {
        *v = spec.sigma * F::of(rng.standard_normal());
    }
}
