//! Seeded random streams and the additive white Gaussian noise channel.
//!
//! Every random draw in the crate comes from an [`RngStream`]: a ChaCha8
//! generator keyed by `seed` (expanded with `seed_from_u64`) and positioned on
//! the ChaCha stream `stream_id`. Uniform doubles take the top 53 bits of a
//! `u64`; normals use the Marsaglia polar method, consuming pairs of uniforms
//! and returning both variates of each accepted pair in order. These choices
//! are fixed so seeded outputs are identical on every platform.

use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::signal::Signal;

/// Stream tags. A tag occupies the high 32 bits of a stream id, an index
/// (trial, layer, ...) the low 32 bits.
pub mod tags {
    pub const CHANNEL_NOISE: u32 = 1;
    pub const GENERATOR_WEIGHTS: u32 = 2;
    pub const GENERATOR_LATENT: u32 = 3;
    pub const GENETIC_SEARCH: u32 = 4;
    pub const RNN_WEIGHTS: u32 = 5;
    pub const SEGMENT_STARTS: u32 = 6;
    pub const INITIAL_GUESS: u32 = 7;
    pub const GA_BOUNDS: u32 = 8;
    pub const RNN_TRAIN_NOISE: u32 = 9;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn tagged(seed: u64, tag: u32, index: u32) -> Self {
        RngStream::new(seed, ((tag as u64) << 32) | index as u64)
    }

    pub fn sampler(&self) -> Sampler {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        Sampler { rng, spare: None }
    }
}

/// A positioned random stream.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Sampler {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n` (Lemire's widening multiply, no rejection;
    /// the bias is below 2⁻³² for the sizes used here).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = math::sqrt(-2.0 * math::ln(s) / s);
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}

/// `n` standard-normal draws from `rng`.
pub fn gaussian_stream(rng: &RngStream, n: usize) -> Vec<f64> {
    let mut s = rng.sampler();
    (0..n).map(|_| s.standard_normal()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Noise power (variance).
    pub sigma2: f64,
    pub seed: u64,
    /// Realization index; selects the noise stream.
    pub realization: u32,
}

impl ChannelConfig {
    pub fn new(sigma2: f64, seed: u64) -> Self {
        ChannelConfig {
            sigma2,
            seed,
            realization: 0,
        }
    }

    pub fn stream(&self) -> RngStream {
        RngStream::tagged(self.seed, tags::CHANNEL_NOISE, self.realization)
    }
}

/// `mu(t) = x(t) + zeta(t)` with i.i.d. zero-mean Gaussian `zeta` of variance
/// `sigma2`. Zero noise power returns the input unchanged.
pub fn awgn(clean: &Signal, cfg: &ChannelConfig) -> Result<Signal> {
    clean.ensure_nonempty("clean signal")?;
    if !(cfg.sigma2 >= 0.0) || !cfg.sigma2.is_finite() {
        return Err(Error::domain(alloc::format!(
            "noise power must be finite and non-negative, got {}",
            cfg.sigma2
        )));
    }
    if cfg.sigma2 == 0.0 {
        return Ok(clean.clone());
    }
    let std = math::sqrt(cfg.sigma2);
    let mut s = cfg.stream().sampler();
    let values = clean
        .values
        .iter()
        .map(|x| x + std * s.standard_normal())
        .collect();
    Ok(clean.like(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_noise_is_identity() {
        let x = Signal::new(vec![1.5, -2.25, 0.0, -0.0, 1e300], 0.1);
        assert_eq!(awgn(&x, &ChannelConfig::new(0.0, 7)).unwrap(), x);
    }

    #[test]
    fn negative_power_is_rejected() {
        let x = Signal::new(vec![1.0], 0.1);
        assert!(matches!(
            awgn(&x, &ChannelConfig::new(-0.1, 7)),
            Err(Error::Domain(_))
        ));
        assert!(awgn(&Signal::new(vec![], 0.1), &ChannelConfig::new(0.1, 7)).is_err());
    }

    #[test]
    fn reseeding_reproduces_noise() {
        let x = Signal::new(vec![0.5; 1000], 0.1);
        let cfg = ChannelConfig::new(0.3, 42);
        assert_eq!(awgn(&x, &cfg).unwrap(), awgn(&x, &cfg).unwrap());
        let other = ChannelConfig {
            realization: 1,
            ..cfg
        };
        assert_ne!(awgn(&x, &cfg).unwrap(), awgn(&x, &other).unwrap());
    }

    #[test]
    fn gaussian_stream_contract() {
        let rng = RngStream::new(3, 9);
        assert!(gaussian_stream(&rng, 0).is_empty());
        assert_eq!(gaussian_stream(&rng, 100), gaussian_stream(&rng, 100));
        assert_ne!(
            gaussian_stream(&rng, 100),
            gaussian_stream(&RngStream::new(3, 10), 100)
        );
    }

    #[test]
    fn gaussian_prefixes_agree() {
        let rng = RngStream::new(11, 0);
        let long = gaussian_stream(&rng, 101);
        let short = gaussian_stream(&rng, 50);
        assert_eq!(&long[..50], &short[..]);
    }

    #[test]
    fn below_and_uniform_ranges() {
        let mut s = RngStream::new(1, 1).sampler();
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(s.below(7) < 7);
            let v = s.uniform_in(-2.0, 3.0);
            assert!((-2.0..3.0).contains(&v));
        }
    }
}
