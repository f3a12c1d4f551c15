//! Hierarchical, counter-based random streams.
//!
//! Every random quantity in a Monte Carlo run is drawn from a ChaCha8 stream
//! addressed by `(seed, sweep index, trial index, purpose)`. ChaCha is a
//! counter-mode generator, so two streams with different addresses never
//! overlap and the output of a trial does not depend on which thread ran it
//! or in which order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The concrete generator handed to every sampling routine.
pub type StreamRng = ChaCha8Rng;

/// What a stream is used for. Each purpose maps to a distinct ChaCha stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Channel,
    CsiError,
    Messages,
    /// Thermal noise of one phase-2 sub-block.
    Noise(u32),
    /// Gaussian samples for replica Monte Carlo integrals.
    ReplicaSamples,
    /// Binomial split of the users into access groups.
    GroupSplit,
    /// Free-form stream for tests and ad-hoc tools.
    Custom(u32),
}

impl Purpose {
    fn stream_id(self) -> u64 {
        let (tag, idx): (u64, u32) = match self {
            Purpose::Channel => (1, 0),
            Purpose::CsiError => (2, 0),
            Purpose::Messages => (3, 0),
            Purpose::Noise(b) => (4, b),
            Purpose::ReplicaSamples => (5, 0),
            Purpose::GroupSplit => (6, 0),
            Purpose::Custom(c) => (7, c),
        };
        (tag << 32) | idx as u64
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root of the stream hierarchy for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Streams for trial `trial` of sweep point `sweep`.
    pub fn trial(&self, sweep: u64, trial: u64) -> TrialStreams {
        let a = splitmix64(self.seed);
        let b = splitmix64(a ^ splitmix64(sweep.wrapping_add(0x5157_EE90)));
        let c = splitmix64(b ^ splitmix64(trial.wrapping_add(0x7121_A100)));
        let words = [c, splitmix64(c), splitmix64(c ^ a), splitmix64(c ^ b)];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        TrialStreams { key }
    }

    /// Shorthand for a stream that is not tied to any sweep or trial.
    pub fn rng(&self, purpose: Purpose) -> StreamRng {
        self.trial(0, 0).rng(purpose)
    }
}

/// All streams belonging to one `(seed, sweep, trial)` address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    key: [u8; 32],
}

impl TrialStreams {
    pub fn rng(&self, purpose: Purpose) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(purpose.stream_id());
        rng
    }

    /// Independent streams for sub-population `group` of the same trial.
    pub fn subgroup(&self, group: u64) -> TrialStreams {
        let mut key = [0u8; 32];
        let tag = splitmix64(group ^ 0x9E6C_63D0_676A_9A99);
        for (i, chunk) in self.key.chunks_exact(8).enumerate() {
            let w = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            let mixed = splitmix64(w ^ tag.wrapping_add(i as u64));
            key[i * 8..(i + 1) * 8].copy_from_slice(&mixed.to_le_bytes());
        }
        TrialStreams { key }
    }
}

/// Draws from the circular complex Gaussian 𝒩_ℂ(0, var): independent real and
/// imaginary parts, each of variance `var / 2`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_same_stream() {
        let s = Streams::new(42);
        let mut a = s.trial(3, 7).rng(Purpose::Noise(2));
        let mut b = s.trial(3, 7).rng(Purpose::Noise(2));
        for _ in 0..16 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn distinct_addresses_differ() {
        let s = Streams::new(42);
        let first = |mut r: StreamRng| r.random::<u64>();
        let base = first(s.trial(0, 0).rng(Purpose::Channel));
        assert_ne!(base, first(s.trial(0, 1).rng(Purpose::Channel)));
        assert_ne!(base, first(s.trial(1, 0).rng(Purpose::Channel)));
        assert_ne!(base, first(s.trial(0, 0).rng(Purpose::CsiError)));
        assert_ne!(base, first(Streams::new(43).trial(0, 0).rng(Purpose::Channel)));
        assert_ne!(base, first(s.trial(0, 0).subgroup(0).rng(Purpose::Channel)));
        assert_ne!(
            first(s.trial(0, 0).subgroup(0).rng(Purpose::Channel)),
            first(s.trial(0, 0).subgroup(1).rng(Purpose::Channel))
        );
        assert_ne!(
            first(s.trial(0, 0).rng(Purpose::Noise(0))),
            first(s.trial(0, 0).rng(Purpose::Noise(1)))
        );
    }

    #[test]
    fn complex_normal_variance() {
        let mut rng = Streams::new(1).rng(Purpose::Custom(0));
        let n = 200_000;
        let var = 0.3;
        let (mut re2, mut im2) = (0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng, var);
            re2 += z.re * z.re;
            im2 += z.im * z.im;
        }
        let (re2, im2) = (re2 / n as f64, im2 / n as f64);
        assert!((re2 - var / 2.0).abs() < 0.02 * var);
        assert!((im2 - var / 2.0).abs() < 0.02 * var);
    }
}
