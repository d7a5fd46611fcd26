//! Seeded sampling validation of exponential-moment and tail claims.
//!
//! Used when exact enumeration is infeasible (Gaussian sources, large
//! products).  Every estimate is reproducible: sample i is drawn from its
//! own counter-keyed stream, and the parallel reduction runs over fixed
//! blocks merged in order, so the result is independent of thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{std_normal_point, SpaceSampler, StreamFactory};
use crate::space::{Accumulator, FunctionTable, MultilinearPolynomial, SpaceRef};

/// Arguments of `exp` are clamped here to avoid overflow; hits are counted.
pub const EXP_CLAMP: f64 = 700.0;

/// Minimum admissible sample count.
pub const MIN_SAMPLES: u64 = 100;

/// Samples per parallel block; fixed so the merge order never changes.
const BLOCK: u64 = 1 << 13;

/// A reproducible Monte Carlo estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    /// Jackknife standard error (for a sample mean this equals the sample
    /// standard deviation over sqrt(N)).
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Number of samples whose exponent argument hit [`EXP_CLAMP`].
    pub clamped: u64,
}

/// What the samples are drawn from.
#[derive(Clone, Debug)]
pub enum SampleSource {
    /// Exact product-space distribution (inverse-CDF per coordinate).
    Space(SpaceRef),
    /// `dim` independent standard Gaussians.
    Gaussian { dim: usize },
}

impl SampleSource {
    fn dim(&self) -> usize {
        match self {
            SampleSource::Space(s) => s.n_coords(),
            SampleSource::Gaussian { dim } => *dim,
        }
    }
}

/// The function whose statistic is being estimated.
pub enum Evaluable<'a> {
    /// Lookup in an enumerated table; only valid for the table's own space.
    Table(&'a FunctionTable),
    Poly(&'a MultilinearPolynomial),
    Function(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

fn validate(source: &SampleSource, f: &Evaluable) -> Result<()> {
    match (source, f) {
        (SampleSource::Space(s), Evaluable::Table(t)) => {
            if **t.space() == **s {
                Ok(())
            } else {
                Err(Error::InvalidSampling {
                    reason: "table is defined on a different product space than the source".into(),
                })
            }
        }
        (SampleSource::Gaussian { .. }, Evaluable::Table(_)) => Err(Error::InvalidSampling {
            reason: "tables cannot be sampled under a Gaussian source".into(),
        }),
        (_, Evaluable::Poly(p)) => {
            if p.n_vars() == source.dim() {
                Ok(())
            } else {
                Err(Error::InvalidSampling {
                    reason: format!(
                        "polynomial has {} variables but the source has dimension {}",
                        p.n_vars(),
                        source.dim()
                    ),
                })
            }
        }
        (_, Evaluable::Function(_)) => Ok(()),
    }
}

/// Block-parallel deterministic reduction of `term(i)` over sample indices.
/// Returns (sum, sum of squares, special-flag count).
fn run_blocks<F>(n_samples: u64, term: F) -> (f64, f64, u64)
where
    F: Fn(u64) -> (f64, u64) + Sync,
{
    let n_blocks = n_samples.div_ceil(BLOCK);
    let stats: Vec<(f64, f64, u64)> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n_samples);
            let mut sum = Accumulator::new();
            let mut sumsq = Accumulator::new();
            let mut flags = 0u64;
            for i in lo..hi {
                let (v, flag) = term(i);
                sum.add(v);
                sumsq.add(v * v);
                flags += flag;
            }
            (sum.value(), sumsq.value(), flags)
        })
        .collect();
    let mut sum = Accumulator::new();
    let mut sumsq = Accumulator::new();
    let mut flags = 0u64;
    for (s, sq, fl) in stats {
        sum.add(s);
        sumsq.add(sq);
        flags += fl;
    }
    (sum.value(), sumsq.value(), flags)
}

/// Deterministic mean and standard error of `term(i)` over sample indices.
/// `term` is responsible for deriving its own stream from the index.
pub(crate) fn mean_and_stderr<F>(n_samples: u64, term: F) -> (f64, f64)
where
    F: Fn(u64) -> f64 + Sync,
{
    let (sum, sumsq, _) = run_blocks(n_samples, |i| (term(i), 0));
    let nf = n_samples as f64;
    let mean = sum / nf;
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn sample_stats<M>(
    source: &SampleSource,
    f: &Evaluable,
    n_samples: u64,
    seed: u64,
    map: M,
) -> Result<(f64, f64, u64)>
where
    M: Fn(f64) -> (f64, u64) + Sync,
{
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidSampling {
            reason: format!("need at least {MIN_SAMPLES} samples, got {n_samples}"),
        });
    }
    validate(source, f)?;
    let sampler = match source {
        SampleSource::Space(s) => Some(SpaceSampler::new(s)?),
        SampleSource::Gaussian { .. } => None,
    };
    let factory = StreamFactory::new(seed);
    let dim = source.dim();
    let result = run_blocks(n_samples, |i| {
        let mut rng = factory.stream(i);
        let mut point = Vec::with_capacity(dim);
        let raw = match source {
            SampleSource::Space(space) => {
                let idx = sampler
                    .as_ref()
                    .expect("sampler exists for space sources")
                    .sample_index(&mut rng);
                match f {
                    Evaluable::Table(t) => t.value(idx),
                    Evaluable::Poly(p) => {
                        space.point_into(idx, &mut point);
                        p.eval(&point).expect("dimension validated")
                    }
                    Evaluable::Function(g) => {
                        space.point_into(idx, &mut point);
                        g(&point)
                    }
                }
            }
            SampleSource::Gaussian { dim } => {
                std_normal_point(&mut rng, *dim, &mut point);
                match f {
                    Evaluable::Table(_) => unreachable!("rejected during validation"),
                    Evaluable::Poly(p) => p.eval(&point).expect("dimension validated"),
                    Evaluable::Function(g) => g(&point),
                }
            }
        };
        map(raw)
    });
    Ok(result)
}

/// Empirical mean of `exp(c |f(X)|^exponent)` with jackknife standard
/// error.  Exponent arguments above [`EXP_CLAMP`] are clamped and counted
/// in the `clamped` field.
pub fn sample_exp_moment(
    source: &SampleSource,
    f: &Evaluable,
    c: f64,
    exponent: f64,
    n_samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::InvalidSampling {
            reason: format!("exponential-moment constant c = {c} must be finite and >= 0"),
        });
    }
    if !exponent.is_finite() || exponent <= 0.0 || exponent > 2.0 {
        return Err(Error::InvalidSampling {
            reason: format!("exponent {exponent} must lie in (0, 2]"),
        });
    }
    let (sum, sumsq, clamped) = sample_stats(source, f, n_samples, seed, |x| {
        let arg = c * x.abs().powf(exponent);
        if arg > EXP_CLAMP {
            (EXP_CLAMP.exp(), 1)
        } else {
            (arg.exp(), 0)
        }
    })?;
    let nf = n_samples as f64;
    let value = sum / nf;
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(MCEstimate {
        value,
        stderr: (var / nf).sqrt(),
        n_samples,
        seed,
        clamped,
    })
}

/// Empirical `P(|f(X)| >= t)` with binomial standard error.
pub fn empirical_tail(
    source: &SampleSource,
    f: &Evaluable,
    t: f64,
    n_samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidSampling {
            reason: format!("tail threshold t = {t} must be finite and >= 0"),
        });
    }
    let (sum, _, _) = sample_stats(source, f, n_samples, seed, |x| {
        (if x.abs() >= t { 1.0 } else { 0.0 }, 0)
    })?;
    let nf = n_samples as f64;
    let p = sum / nf;
    let stderr = ((p * (1.0 - p)).max(0.0) / nf).sqrt();
    Ok(MCEstimate {
        value: p,
        stderr,
        n_samples,
        seed,
        clamped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::EXP_MOMENT_CONSTANT;
    use crate::space::rademacher_space;
    use approx::assert_relative_eq;

    fn rademacher_source(n: usize) -> SampleSource {
        SampleSource::Space(rademacher_space(n).unwrap())
    }

    #[test]
    fn zero_function_gives_moment_one_with_no_error() {
        let source = rademacher_source(2);
        let zero = FunctionTable::zero(rademacher_space(2).unwrap());
        // Same structure, different Arc: the structural check must accept it.
        let est = sample_exp_moment(&source, &Evaluable::Table(&zero), 1.0, 1.0, 500, 7).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
        assert_eq!(est.clamped, 0);
    }

    #[test]
    fn unit_magnitude_chaos_matches_enumeration_exactly() {
        let space = rademacher_space(2).unwrap();
        let f = FunctionTable::from_fn(space.clone(), |x| x[0] * x[1]).unwrap();
        let c = EXP_MOMENT_CONSTANT;
        let est = sample_exp_moment(
            &SampleSource::Space(space),
            &Evaluable::Table(&f),
            c,
            1.0,
            100_000,
            3,
        )
        .unwrap();
        // |f| = 1 on every outcome, so every sample contributes exp(c).
        assert_relative_eq!(est.value, c.exp(), max_relative = 1e-12);
        // Identical summands leave at most rounding noise in the variance.
        assert!(est.stderr < 1e-9, "stderr {}", est.stderr);
    }

    #[test]
    fn gaussian_square_exponential_matches_the_closed_form() {
        let poly = MultilinearPolynomial::new(1).with_coeff(&[1], 1.0).unwrap();
        let c = 0.1;
        let est = sample_exp_moment(
            &SampleSource::Gaussian { dim: 1 },
            &Evaluable::Poly(&poly),
            c,
            2.0,
            200_000,
            11,
        )
        .unwrap();
        let exact = (1.0 - 2.0 * c).powf(-0.5);
        assert!(
            (est.value - exact).abs() <= 4.0 * est.stderr,
            "value {} vs exact {exact} (stderr {})",
            est.value,
            est.stderr
        );
        assert_eq!(est.clamped, 0);
    }

    #[test]
    fn estimates_are_deterministic_in_the_seed() {
        let space = rademacher_space(3).unwrap();
        let f = FunctionTable::from_fn(space.clone(), |x| x[0] + x[1] * x[2]).unwrap();
        let source = SampleSource::Space(space);
        let a = sample_exp_moment(&source, &Evaluable::Table(&f), 0.3, 1.0, 5_000, 42).unwrap();
        let b = sample_exp_moment(&source, &Evaluable::Table(&f), 0.3, 1.0, 5_000, 42).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.stderr, b.stderr);
        let c = sample_exp_moment(&source, &Evaluable::Table(&f), 0.3, 1.0, 5_000, 43).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn tail_of_a_unit_magnitude_function_is_exactly_one() {
        let space = rademacher_space(1).unwrap();
        let f = FunctionTable::from_fn(space.clone(), |x| x[0]).unwrap();
        let source = SampleSource::Space(space);
        let est = empirical_tail(&source, &Evaluable::Table(&f), 0.5, 1_000, 5).unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.stderr, 0.0);
        let above = empirical_tail(&source, &Evaluable::Table(&f), 2.0, 1_000, 5).unwrap();
        assert_eq!(above.value, 0.0);
        let at_negative_zero = empirical_tail(&source, &Evaluable::Table(&f), -0.0, 1_000, 5).unwrap();
        assert_eq!(at_negative_zero.value, 1.0);
        assert!(empirical_tail(&source, &Evaluable::Table(&f), -1.0, 1_000, 5).is_err());
    }

    #[test]
    fn overflow_is_clamped_and_flagged() {
        let source = SampleSource::Gaussian { dim: 1 };
        let huge = |_: &[f64]| 1.0e308;
        let est = sample_exp_moment(&source, &Evaluable::Function(&huge), 1.0, 2.0, 200, 1).unwrap();
        assert_eq!(est.clamped, 200);
        assert_relative_eq!(est.value, EXP_CLAMP.exp(), max_relative = 1e-12);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let space = rademacher_space(2).unwrap();
        let f = FunctionTable::zero(space.clone());
        let source = SampleSource::Space(space);
        // Too few samples.
        assert!(sample_exp_moment(&source, &Evaluable::Table(&f), 1.0, 1.0, 50, 0).is_err());
        // Bad exponent and bad constant.
        assert!(sample_exp_moment(&source, &Evaluable::Table(&f), 1.0, 0.0, 500, 0).is_err());
        assert!(sample_exp_moment(&source, &Evaluable::Table(&f), 1.0, 2.5, 500, 0).is_err());
        assert!(sample_exp_moment(&source, &Evaluable::Table(&f), -1.0, 1.0, 500, 0).is_err());
        // Table under a Gaussian source.
        assert!(sample_exp_moment(
            &SampleSource::Gaussian { dim: 2 },
            &Evaluable::Table(&f),
            1.0,
            1.0,
            500,
            0
        )
        .is_err());
        // Table on a structurally different space.
        let other = rademacher_space(3).unwrap();
        assert!(sample_exp_moment(
            &SampleSource::Space(other),
            &Evaluable::Table(&f),
            1.0,
            1.0,
            500,
            0
        )
        .is_err());
        // Polynomial dimension mismatch.
        let poly = MultilinearPolynomial::new(3).with_coeff(&[1], 1.0).unwrap();
        assert!(empirical_tail(
            &SampleSource::Gaussian { dim: 2 },
            &Evaluable::Poly(&poly),
            0.5,
            500,
            0
        )
        .is_err());
    }

    #[test]
    fn sampled_moment_agrees_with_enumeration_within_error_bars() {
        let space = rademacher_space(3).unwrap();
        let f = FunctionTable::from_fn(space.clone(), |x| {
            0.7 * x[0] - 0.4 * x[1] * x[2] + 0.2 * x[0] * x[1] * x[2]
        })
        .unwrap();
        let c = 0.25;
        let exact = f.map(|v| (c * v.abs()).exp()).mean();
        let est = sample_exp_moment(
            &SampleSource::Space(space),
            &Evaluable::Table(&f),
            c,
            1.0,
            100_000,
            17,
        )
        .unwrap();
        assert!(
            (est.value - exact).abs() <= 4.0 * est.stderr,
            "value {} vs exact {exact} (stderr {})",
            est.value,
            est.stderr
        );
    }
}
