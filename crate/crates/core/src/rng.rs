//! Deterministic, counter-addressable random streams.
//!
//! Reproducibility under parallelism comes from keying an independent
//! ChaCha stream to every sample index: the draw for sample i is the same
//! no matter which thread produces it or in which order blocks run.
//! Uniforms are built from the top 53 bits of the counter output and lie
//! strictly inside (0, 1); Gaussians go through the standard-normal
//! inverse CDF so the mapping is a pure function of the counter.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::space::ProductSpace;

/// Hands out independent deterministic streams keyed by (seed, index).
#[derive(Clone, Debug)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The i-th stream; streams with distinct indices never overlap.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw in the open interval (0, 1).
pub fn uniform_01(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Standard normal draw via the inverse CDF.
pub fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = uniform_01(rng);
    standard_normal().inverse_cdf(u)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal parameters are valid")
}

/// Fills `buf` with `dim` independent standard normals.
pub fn std_normal_point(rng: &mut ChaCha8Rng, dim: usize, buf: &mut Vec<f64>) {
    buf.clear();
    for _ in 0..dim {
        buf.push(std_normal(rng));
    }
}

/// Inverse-CDF sampler for the outcome index of a product space.
#[derive(Clone, Debug)]
pub struct SpaceSampler {
    cumulative: Vec<Vec<f64>>,
    strides: Vec<usize>,
}

impl SpaceSampler {
    pub fn new(space: &ProductSpace) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(space.n_coords());
        let mut strides = Vec::with_capacity(space.n_coords());
        for i in 1..=space.n_coords() {
            let probs = space.coord(i).probs();
            let mut cum = Vec::with_capacity(probs.len());
            let mut acc = 0.0;
            for &p in probs {
                acc += p;
                cum.push(acc);
            }
            if let Some(last) = cum.last_mut() {
                // Guard the top bucket against the validation tolerance.
                *last = 1.0;
            } else {
                return Err(Error::EmptyInput {
                    reason: "coordinate without atoms".into(),
                });
            }
            cumulative.push(cum);
            strides.push(space.stride(i));
        }
        Ok(Self {
            cumulative,
            strides,
        })
    }

    /// Draws one outcome index (one uniform per coordinate).
    pub fn sample_index(&self, rng: &mut ChaCha8Rng) -> usize {
        let mut idx = 0;
        for (cum, &stride) in self.cumulative.iter().zip(&self.strides) {
            let u = uniform_01(rng);
            let digit = cum.partition_point(|&c| c < u);
            idx += digit.min(cum.len() - 1) * stride;
        }
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::rademacher_space;

    #[test]
    fn streams_are_reproducible_and_independent() {
        let factory = StreamFactory::new(42);
        let a: Vec<u64> = {
            let mut r = factory.stream(7);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = factory.stream(7);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let c: Vec<u64> = {
            let mut r = factory.stream(8);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_ne!(a, c);
    }

    #[test]
    fn uniforms_stay_in_the_open_interval() {
        let factory = StreamFactory::new(1);
        let mut rng = factory.stream(0);
        for _ in 0..1000 {
            let u = uniform_01(&mut rng);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_draws_have_plausible_moments() {
        let factory = StreamFactory::new(9);
        let mut rng = factory.stream(0);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let z = std_normal(&mut rng);
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn space_sampling_matches_weights() {
        let space = rademacher_space(2).unwrap();
        let sampler = SpaceSampler::new(&space).unwrap();
        let factory = StreamFactory::new(3);
        let mut counts = [0usize; 4];
        let n = 40_000;
        for i in 0..n {
            let mut rng = factory.stream(i);
            counts[sampler.sample_index(&mut rng)] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq}");
        }
    }
}
