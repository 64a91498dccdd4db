//! Deterministic, splittable random streams.
//!
//! A stream is the pair `(seed, stream_id)`. The generator behind it is
//! ChaCha8 keyed from `seed` with the ChaCha stream counter set to
//! `stream_id`, so the variate sequence depends on nothing but those two
//! numbers and distinct ids give independent streams.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Serialize, Serializer};

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RngStream {
    #[serde(serialize_with = "serialize_seed")]
    pub seed: u64,
    pub stream_id: u64,
}

/// Seeds are written as decimal strings so JSON consumers never round them.
pub(crate) fn serialize_seed<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&seed.to_string())
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        StreamRng { rng }
    }
}

/// The generator of an [`RngStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    rng: ChaCha8Rng,
}

impl StreamRng {
    /// Uniform on the open interval `(0, 1)`: the 52-bit grid shifted by half a step.
    pub fn uniform_open(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * SCALE
    }

    /// A parameter-1 exponential variate.
    pub fn exponential(&mut self) -> f64 {
        exponential_from_uniform(self.uniform_open())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// The first exponential variate of `stream`.
pub fn draw_exponential(stream: &RngStream) -> f64 {
    stream.generator().exponential()
}

/// Inverse transform `-ln(u)`.
///
/// `u` is clamped into the open interval so the result is always positive
/// and finite: `u >= 1` reads as the largest double below 1 and `u <= 0`
/// as the smallest positive double.
pub fn exponential_from_uniform(u: f64) -> f64 {
    const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;
    let u = if u.is_nan() { 0.5 } else { u.clamp(f64::MIN_POSITIVE, BELOW_ONE) };
    -u.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_transform_of_e_inverse_is_one() {
        assert_eq!(exponential_from_uniform((-1.0f64).exp()), 1.0);
    }

    #[test]
    fn boundary_uniforms_stay_positive_and_finite() {
        let z = exponential_from_uniform(1.0);
        assert!(z > 0.0 && z < 1e-15);
        let z = exponential_from_uniform(0.0);
        assert!(z.is_finite() && z > 700.0);
    }

    #[test]
    fn uniform_is_open() {
        let mut g = RngStream::new(7, 0).generator();
        for _ in 0..10_000 {
            let u = g.uniform_open();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut g = RngStream::new(42, 3).generator();
            (0..8).map(|_| g.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut g = RngStream::new(42, 3).generator();
            (0..8).map(|_| g.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut g = RngStream::new(42, 4).generator();
            (0..8).map(|_| g.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn frozen_variates() {
        // guards the stream layout: any change here breaks every published seed
        assert_eq!(RngStream::new(42, 0).generator().next_u64(), 12_578_764_544_318_200_737);
        assert_eq!(draw_exponential(&RngStream::new(42, 7)).to_bits(), 4_611_802_607_957_086_276);
    }

    #[test]
    fn exponential_mean_is_one() {
        let n = 1_000_000u64;
        let mut g = RngStream::new(42, 0).generator();
        let mean = (0..n).map(|_| g.exponential()).sum::<f64>() / n as f64;
        // 4 sigma / sqrt(n) with sigma = 1
        assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
    }
}
