//! Finite product probability spaces and exact function tables.
//!
//! A `ProductSpace` is a vector of independent finite-support random
//! variables. Real functions of the vector are stored exhaustively as
//! `FunctionTable`s indexed by a mixed-radix outcome index (little-endian:
//! coordinate 1 varies fastest). Everything downstream — conditional
//! expectations, L^p norms, difference operators — reduces to exact
//! finite sums over this enumeration.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the joint outcome count of a product space.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// Probabilities must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Block length for deterministic parallel reductions over outcomes.
const REDUCE_BLOCK: usize = 1 << 14;

/// Neumaier-compensated accumulator: deterministic, order-fixed summation
/// with error compensation, so parallel block reductions stay reproducible.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum `term(index)` over `0..len` in fixed block order. Blocks may be
/// evaluated in parallel; the final combination is sequential over block
/// index, so the result is independent of thread scheduling.
pub(crate) fn block_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if len <= 2 * REDUCE_BLOCK {
        let mut acc = Accumulator::new();
        for i in 0..len {
            acc.add(term(i));
        }
        return acc.value();
    }
    use rayon::prelude::*;
    let n_blocks = len.div_ceil(REDUCE_BLOCK);
    let partials: Vec<f64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCE_BLOCK;
            let hi = (lo + REDUCE_BLOCK).min(len);
            let mut acc = Accumulator::new();
            for i in lo..hi {
                acc.add(term(i));
            }
            acc.value()
        })
        .collect();
    let mut acc = Accumulator::new();
    for p in partials {
        acc.add(p);
    }
    acc.value()
}

/// One independent coordinate: finitely many real atoms with positive
/// probabilities summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    /// Validates and builds a distribution. Probabilities must be positive
    /// and sum to one within `PROB_SUM_TOL`; atoms must be finite and
    /// pairwise distinct.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution {
                reason: "support must contain at least one atom".into(),
            });
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution {
                reason: format!(
                    "support has {} atoms but probs has {} entries",
                    support.len(),
                    probs.len()
                ),
            });
        }
        for &x in &support {
            if !x.is_finite() {
                return Err(Error::InvalidDistribution {
                    reason: format!("support atom {x} is not finite"),
                });
            }
        }
        for (i, &x) in support.iter().enumerate() {
            for &y in &support[i + 1..] {
                if x == y {
                    return Err(Error::InvalidDistribution {
                        reason: format!("support atom {x} repeated"),
                    });
                }
            }
        }
        let mut total = Accumulator::new();
        for &p in &probs {
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidDistribution {
                    reason: format!("probability {p} is not strictly positive"),
                });
            }
            total.add(p);
        }
        let total = total.value();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution {
                reason: format!("probabilities sum to {total}, not 1 within {PROB_SUM_TOL:e}"),
            });
        }
        Ok(Self { support, probs })
    }

    /// Uniform distribution on {-1, +1}, listed in that order so that
    /// tables over Rademacher coordinates enumerate sign patterns in a
    /// fixed, documented order.
    pub fn rademacher() -> Self {
        Self {
            support: vec![-1.0, 1.0],
            probs: vec![0.5, 0.5],
        }
    }

    /// Deterministic coordinate concentrated on a single atom.
    pub fn point_mass(atom: f64) -> Result<Self> {
        Self::new(vec![atom], vec![1.0])
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    /// Always false: validation guarantees at least one atom.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// First moment.
    pub fn mean(&self) -> f64 {
        let mut acc = Accumulator::new();
        for (x, p) in self.support.iter().zip(&self.probs) {
            acc.add(x * p);
        }
        acc.value()
    }

    /// Raw second moment.
    pub fn second_moment(&self) -> f64 {
        let mut acc = Accumulator::new();
        for (x, p) in self.support.iter().zip(&self.probs) {
            acc.add(x * x * p);
        }
        acc.value()
    }

    /// True for the symmetric two-point law on {-1, +1}.
    pub fn is_rademacher(&self) -> bool {
        if self.support.len() != 2 {
            return false;
        }
        let mut atoms = [self.support[0], self.support[1]];
        if atoms[0] > atoms[1] {
            atoms.swap(0, 1);
        }
        atoms[0] == -1.0
            && atoms[1] == 1.0
            && (self.probs[0] - 0.5).abs() <= PROB_SUM_TOL
            && (self.probs[1] - 0.5).abs() <= PROB_SUM_TOL
    }
}

/// Product of independent finite-support coordinates with a fixed
/// enumeration order: outcome index `idx` assigns coordinate `i`
/// (1-based) the atom `support[(idx / stride_i) % len_i]`, where
/// `stride_1 = 1` (coordinate 1 varies fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpace {
    coords: Vec<FiniteDistribution>,
    strides: Vec<usize>,
    n_outcomes: usize,
}

/// Shared handle to a product space; tables hold one of these so that
/// operations can cheaply verify operands live on the same space.
pub type SpaceRef = Arc<ProductSpace>;

impl ProductSpace {
    /// Builds a space with the default enumeration budget.
    pub fn new(coords: Vec<FiniteDistribution>) -> Result<Self> {
        Self::with_budget(coords, DEFAULT_ENUMERATION_BUDGET)
    }

    /// Builds a space, refusing joint outcome counts above `budget`.
    pub fn with_budget(coords: Vec<FiniteDistribution>, budget: u128) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput {
                reason: "a product space needs at least one coordinate".into(),
            });
        }
        let mut count: u128 = 1;
        for c in &coords {
            count = count
                .checked_mul(c.len() as u128)
                .ok_or(Error::EnumerationTooLarge {
                    outcomes: u128::MAX,
                    budget,
                })?;
        }
        if count > budget || count > usize::MAX as u128 {
            return Err(Error::EnumerationTooLarge {
                outcomes: count,
                budget,
            });
        }
        let mut strides = Vec::with_capacity(coords.len());
        let mut s = 1usize;
        for c in &coords {
            strides.push(s);
            s *= c.len();
        }
        Ok(Self {
            coords,
            strides,
            n_outcomes: s,
        })
    }

    /// Number of coordinates n.
    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    /// Joint outcome count.
    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn coords(&self) -> &[FiniteDistribution] {
        &self.coords
    }

    /// Coordinate distribution, 1-based.
    pub fn coord(&self, i: usize) -> &FiniteDistribution {
        &self.coords[i - 1]
    }

    /// Index stride of coordinate `i` (1-based).
    pub fn stride(&self, i: usize) -> usize {
        self.strides[i - 1]
    }

    /// Validates a 1-based coordinate index.
    pub fn check_coord(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n_coords() {
            return Err(Error::InvalidOrder {
                reason: format!(
                    "coordinate {i} out of range 1..={n}",
                    n = self.n_coords()
                ),
            });
        }
        Ok(())
    }

    /// Support position ("digit") of coordinate `i` (1-based) in outcome `idx`.
    pub fn digit(&self, idx: usize, i: usize) -> usize {
        (idx / self.strides[i - 1]) % self.coords[i - 1].len()
    }

    /// Atom taken by coordinate `i` (1-based) in outcome `idx`.
    pub fn atom(&self, idx: usize, i: usize) -> f64 {
        self.coords[i - 1].support[self.digit(idx, i)]
    }

    /// Writes the full outcome point into `buf`.
    pub fn point_into(&self, idx: usize, buf: &mut Vec<f64>) {
        buf.clear();
        let mut rest = idx;
        for c in &self.coords {
            buf.push(c.support[rest % c.len()]);
            rest /= c.len();
        }
    }

    /// Outcome as a point of R^n.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.n_coords());
        self.point_into(idx, &mut buf);
        buf
    }

    /// Probability of a single outcome.
    pub fn weight(&self, idx: usize) -> f64 {
        let mut w = 1.0;
        let mut rest = idx;
        for c in &self.coords {
            w *= c.probs[rest % c.len()];
            rest /= c.len();
        }
        w
    }

    /// True when every coordinate is Rademacher.
    pub fn is_rademacher(&self) -> bool {
        self.coords.iter().all(FiniteDistribution::is_rademacher)
    }

    /// Deterministic weighted sum of `term(idx)` over all outcomes:
    /// sum of P(idx) * term(idx).
    pub(crate) fn expect<F>(&self, term: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync,
    {
        block_sum(self.n_outcomes, |idx| self.weight(idx) * term(idx))
    }
}

/// Convenience constructor matching the external JSON layout.
pub fn build_space(dists: Vec<FiniteDistribution>) -> Result<SpaceRef> {
    Ok(Arc::new(ProductSpace::new(dists)?))
}

/// A real function of the product vector, tabulated over every outcome.
#[derive(Clone, Debug)]
pub struct FunctionTable {
    space: SpaceRef,
    values: Vec<f64>,
}

impl FunctionTable {
    /// Wraps a value table after checking length and finiteness.
    pub fn from_values(space: SpaceRef, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.n_outcomes() {
            return Err(Error::DimensionMismatch {
                reason: format!(
                    "table has {} values but the space has {} outcomes",
                    values.len(),
                    space.n_outcomes()
                ),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("table value {bad}"),
            });
        }
        Ok(Self { space, values })
    }

    /// Tabulates `f` at every outcome point.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(space: SpaceRef, mut f: F) -> Result<Self> {
        let mut buf = Vec::with_capacity(space.n_coords());
        let mut values = Vec::with_capacity(space.n_outcomes());
        for idx in 0..space.n_outcomes() {
            space.point_into(idx, &mut buf);
            values.push(f(&buf));
        }
        Self::from_values(space, values)
    }

    /// The constant function `c`.
    pub fn constant(space: SpaceRef, c: f64) -> Self {
        let n = space.n_outcomes();
        Self {
            space,
            values: vec![c; n],
        }
    }

    /// The zero function.
    pub fn zero(space: SpaceRef) -> Self {
        Self::constant(space, 0.0)
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) || self.space == other.space {
            Ok(())
        } else {
            Err(Error::MixedSpaces)
        }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            values,
        })
    }

    /// Pointwise difference.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            values,
        })
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self {
            space: Arc::clone(&self.space),
            values,
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// Adds a constant.
    pub fn add_scalar(&self, b: f64) -> Self {
        self.map(|v| v + b)
    }

    /// Applies `g` to every value.
    pub fn map<F: Fn(f64) -> f64>(&self, g: F) -> Self {
        Self {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|&v| g(v)).collect(),
        }
    }

    /// Pointwise absolute value.
    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Pointwise positive part max(f, 0).
    pub fn pos_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// Pointwise negative part max(-f, 0).
    pub fn neg_part(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    /// Expectation E f.
    pub fn mean(&self) -> f64 {
        self.space.expect(|idx| self.values[idx])
    }

    /// Variance computed as E (f - E f)^2.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.space.expect(|idx| {
            let d = self.values[idx] - m;
            d * d
        })
    }

    /// Weighted inner product E f g.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_space(other)?;
        Ok(self
            .space
            .expect(|idx| self.values[idx] * other.values[idx]))
    }

    /// Largest |f| over outcomes (all outcomes carry positive probability).
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// L^p norm (E |f|^p)^{1/p} for p >= 1; `f64::INFINITY` gives the
    /// essential supremum, which is the plain maximum here because every
    /// atom has positive probability.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p == f64::INFINITY {
            return Ok(self.sup_norm());
        }
        if !(p >= 1.0) || p.is_nan() {
            return Err(Error::InvalidExponent { p });
        }
        let as_int = p as u32;
        let moment = if p == as_int as f64 && as_int <= 64 {
            // Integer exponents via powi keeps dyadic instances exact.
            self.space
                .expect(|idx| self.values[idx].abs().powi(as_int as i32))
        } else {
            self.space.expect(|idx| self.values[idx].abs().powf(p))
        };
        Ok(moment.powf(1.0 / p))
    }

    /// Conditional expectation E_S f, integrating out the (1-based)
    /// coordinates listed in `coords`. The result is constant along every
    /// coordinate in S; the empty set is the identity and the full set
    /// yields the constant E f.
    pub fn cond_expectation(&self, coords: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.space.n_coords()];
        for &i in coords {
            self.space.check_coord(i)?;
            seen[i - 1] = true;
        }
        let mut out = self.clone();
        for i in 1..=self.space.n_coords() {
            if seen[i - 1] {
                out.integrate_coord_in_place(i);
            }
        }
        Ok(out)
    }

    /// Replaces the table by E_i f in place (coordinate `i` is 1-based).
    fn integrate_coord_in_place(&mut self, i: usize) {
        let dist = self.space.coord(i);
        let r = dist.len();
        if r == 1 {
            return;
        }
        let stride = self.space.stride(i);
        let probs = dist.probs();
        let block = stride * r;
        let n = self.values.len();
        let mut hi = 0;
        while hi < n {
            for lo in 0..stride {
                let base = hi + lo;
                let mut acc = 0.0;
                for (a, &p) in probs.iter().enumerate() {
                    acc += p * self.values[base + a * stride];
                }
                for a in 0..r {
                    self.values[base + a * stride] = acc;
                }
            }
            hi += block;
        }
    }

    /// Swaps coordinate `i` (1-based) of the argument for the fixed outcome
    /// digit `a` (0-based): returns the table idx -> f(idx with digit_i = a).
    /// Useful for spelling out resampling operators literally.
    pub fn substitute_digit(&self, i: usize, a: usize) -> Result<Self> {
        self.space.check_coord(i)?;
        let stride = self.space.stride(i);
        let r = self.space.coord(i).len();
        if a >= r {
            return Err(Error::InvalidInput {
                reason: format!("outcome digit {a} out of range for coordinate {i} ({r} outcomes)"),
            });
        }
        let mut values = Vec::with_capacity(self.values.len());
        for idx in 0..self.values.len() {
            let d = (idx / stride) % r;
            let base = idx - d * stride;
            values.push(self.values[base + a * stride]);
        }
        Ok(Self {
            space: Arc::clone(&self.space),
            values,
        })
    }
}

/// A multilinear polynomial sum over subsets I of {1..n} of a_I * prod_{i in I} x_i,
/// stored sparsely by sorted index subset.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MultilinearPolynomial {
    n: usize,
    coeffs: std::collections::BTreeMap<Vec<usize>, f64>,
}

impl MultilinearPolynomial {
    /// Zero polynomial in `n` variables.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            coeffs: Default::default(),
        }
    }

    /// Sets the coefficient of the monomial over `indices` (1-based,
    /// duplicates forbidden). The empty set addresses the constant term.
    pub fn set_coeff(&mut self, indices: &[usize], a: f64) -> Result<()> {
        let mut key = indices.to_vec();
        key.sort_unstable();
        for w in key.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidOrder {
                    reason: format!("monomial index {} repeated", w[0]),
                });
            }
        }
        if let Some(&last) = key.last() {
            if key[0] == 0 || last > self.n {
                return Err(Error::InvalidOrder {
                    reason: format!("monomial indices {key:?} not within 1..={}", self.n),
                });
            }
        }
        if !a.is_finite() {
            return Err(Error::NonFinite {
                context: format!("coefficient {a}"),
            });
        }
        if a == 0.0 {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, a);
        }
        Ok(())
    }

    /// Builder-style `set_coeff`.
    pub fn with_coeff(mut self, indices: &[usize], a: f64) -> Result<Self> {
        self.set_coeff(indices, a)?;
        Ok(self)
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.n
    }

    /// Coefficient of a monomial (0 when absent).
    pub fn coeff(&self, indices: &[usize]) -> f64 {
        let mut key = indices.to_vec();
        key.sort_unstable();
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    /// Iterates (sorted subset, coefficient) pairs in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.coeffs.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Largest monomial degree (0 for the zero or constant polynomial).
    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// True when no monomial of degree in `lo..=hi` is present.
    pub fn degrees_absent(&self, lo: usize, hi: usize) -> bool {
        !self
            .coeffs
            .keys()
            .any(|k| k.len() >= lo && k.len() <= hi)
    }

    /// Evaluates at a point of R^n.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                reason: format!("point has {} coordinates, polynomial has {}", x.len(), self.n),
            });
        }
        let mut acc = Accumulator::new();
        for (key, &a) in &self.coeffs {
            let mut term = a;
            for &i in key {
                term *= x[i - 1];
            }
            acc.add(term);
        }
        Ok(acc.value())
    }
}

/// Tabulates a multilinear polynomial over a product space.
pub fn eval_polynomial(space: &SpaceRef, p: &MultilinearPolynomial) -> Result<FunctionTable> {
    if p.n_vars() != space.n_coords() {
        return Err(Error::DimensionMismatch {
            reason: format!(
                "polynomial has {} variables, space has {} coordinates",
                p.n_vars(),
                space.n_coords()
            ),
        });
    }
    FunctionTable::from_fn(Arc::clone(space), |x| {
        p.eval(x).expect("dimension checked above")
    })
}

/// Standard Rademacher product space on n coordinates.
pub fn rademacher_space(n: usize) -> Result<SpaceRef> {
    build_space(vec![FiniteDistribution::rademacher(); n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rad2() -> SpaceRef {
        rademacher_space(2).unwrap()
    }

    #[test]
    fn two_rademacher_coordinates_enumerate_four_outcomes() {
        let s = rad2();
        assert_eq!(s.n_outcomes(), 4);
        assert_eq!(s.n_coords(), 2);
        // Coordinate 1 varies fastest.
        assert_eq!(s.point(0), vec![-1.0, -1.0]);
        assert_eq!(s.point(1), vec![1.0, -1.0]);
        assert_eq!(s.point(2), vec![-1.0, 1.0]);
        assert_eq!(s.point(3), vec![1.0, 1.0]);
        for idx in 0..4 {
            assert_eq!(s.weight(idx), 0.25);
        }
    }

    #[test]
    fn point_mass_coordinate_gives_one_outcome() {
        let s = build_space(vec![FiniteDistribution::point_mass(0.0).unwrap()]).unwrap();
        assert_eq!(s.n_outcomes(), 1);
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| 7.0 * x[0] + 3.0).unwrap();
        assert_eq!(f.values(), &[3.0]);
        assert_eq!(f.variance(), 0.0);
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let err = FiniteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.6]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
        let err = FiniteDistribution::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
        let err = FiniteDistribution::new(vec![0.0], vec![-1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution { .. }));
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let coords = vec![FiniteDistribution::rademacher(); 5];
        let err = ProductSpace::with_budget(coords, 16).unwrap_err();
        assert!(matches!(err, Error::EnumerationTooLarge { outcomes: 32, budget: 16 }));
    }

    #[test]
    fn parity_polynomial_tabulates_in_sign_order() {
        let s = rad2();
        let p = MultilinearPolynomial::new(2).with_coeff(&[1, 2], 1.0).unwrap();
        let f = eval_polynomial(&s, &p).unwrap();
        assert_eq!(f.values(), &[1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn constant_polynomial_tabulates_constant() {
        let s = rad2();
        let p = MultilinearPolynomial::new(2).with_coeff(&[], 3.0).unwrap();
        let f = eval_polynomial(&s, &p).unwrap();
        assert_eq!(f.values(), &[3.0; 4]);
    }

    #[test]
    fn linear_combination_polynomial_has_zero_mean() {
        let s = rad2();
        let p = MultilinearPolynomial::new(2)
            .with_coeff(&[1], 2.0)
            .unwrap()
            .with_coeff(&[2], -1.0)
            .unwrap();
        let f = eval_polynomial(&s, &p).unwrap();
        assert_eq!(f.values(), &[-1.0, 3.0, -3.0, 1.0]);
        assert_eq!(f.mean(), 0.0);
    }

    #[test]
    fn conditional_expectation_kills_odd_coordinate() {
        let s = rad2();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] * x[1]).unwrap();
        let e1 = f.cond_expectation(&[1]).unwrap();
        assert_eq!(e1.values(), &[0.0; 4]);
    }

    #[test]
    fn conditional_expectation_over_second_coordinate_leaves_first() {
        let s = rad2();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] + x[1]).unwrap();
        let e2 = f.cond_expectation(&[2]).unwrap();
        let x1 = FunctionTable::from_fn(Arc::clone(&s), |x| x[0]).unwrap();
        assert_eq!(e2.values(), x1.values());
    }

    #[test]
    fn empty_conditioning_set_is_identity() {
        let s = rad2();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| 0.3 * x[0] - x[1]).unwrap();
        let e = f.cond_expectation(&[]).unwrap();
        assert_eq!(e.values(), f.values());
    }

    #[test]
    fn full_conditioning_set_gives_mean() {
        let s = rad2();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] + 2.0 * x[1] + 5.0).unwrap();
        let e = f.cond_expectation(&[1, 2]).unwrap();
        for &v in e.values() {
            assert_relative_eq!(v, 5.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn lp_norm_examples() {
        let s1 = rademacher_space(1).unwrap();
        let x1 = FunctionTable::from_fn(Arc::clone(&s1), |x| x[0]).unwrap();
        assert_eq!(x1.lp_norm(2.0).unwrap(), 1.0);

        let s = rad2();
        let c = FunctionTable::constant(Arc::clone(&s), 3.0);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(c.lp_norm(p).unwrap(), 3.0, max_relative = 1e-15);
        }

        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] * x[1] + 1.0).unwrap();
        assert_eq!(f.lp_norm(1.0).unwrap(), 1.0);
    }

    #[test]
    fn lp_norm_rejects_p_below_one() {
        let s = rad2();
        let f = FunctionTable::constant(Arc::clone(&s), 1.0);
        assert!(matches!(
            f.lp_norm(0.5).unwrap_err(),
            Error::InvalidExponent { .. }
        ));
        assert!(f.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn tables_from_different_spaces_do_not_mix() {
        let a = rad2();
        let b = rademacher_space(3).unwrap();
        let f = FunctionTable::constant(a, 1.0);
        let g = FunctionTable::constant(b, 1.0);
        assert!(matches!(f.add(&g).unwrap_err(), Error::MixedSpaces));
    }

    #[test]
    fn equal_spaces_in_different_arcs_do_mix() {
        let f = FunctionTable::constant(rad2(), 1.0);
        let g = FunctionTable::constant(rad2(), 2.0);
        assert_eq!(f.add(&g).unwrap().values(), &[3.0; 4]);
    }

    #[test]
    fn substitute_digit_fixes_a_coordinate() {
        let s = rad2();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] + 10.0 * x[1]).unwrap();
        let at_plus = f.substitute_digit(1, 1).unwrap(); // digit 1 of coordinate 1 is +1
        assert_eq!(at_plus.values(), &[-9.0, -9.0, 11.0, 11.0]);
        assert!(f.substitute_digit(1, 2).is_err());
        assert!(f.substitute_digit(3, 0).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let s = rad2();
        let err = FunctionTable::from_values(s, vec![1.0, 2.0, f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn polynomial_rejects_bad_monomials() {
        let p = MultilinearPolynomial::new(3);
        assert!(p.clone().with_coeff(&[1, 1], 1.0).is_err());
        assert!(p.clone().with_coeff(&[0], 1.0).is_err());
        assert!(p.clone().with_coeff(&[4], 1.0).is_err());
        assert!(p.clone().with_coeff(&[2], f64::INFINITY).is_err());
    }

    #[test]
    fn compensated_sum_handles_adversarial_order() {
        let mut acc = Accumulator::new();
        acc.add(1.0);
        acc.add(1e100);
        acc.add(1.0);
        acc.add(-1e100);
        assert_eq!(acc.value(), 2.0);
    }
}
