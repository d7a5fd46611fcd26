//! Derivative hypermatrices for polynomial test functions, symmetric
//! tensor norms, and certificate calculators for the log-Sobolev and
//! sphere settings.
//!
//! Exact derivative tensors exist only for multilinear polynomials; for
//! general smooth functions the caller supplies the norm values directly
//! (see [`SmoothNorms`]).  Operator norms are exact for orders 1 and 2;
//! for order >= 3 a shifted symmetric power iteration produces a certified
//! lower bound, with the Hilbert-Schmidt norm as the matching upper bound.

use std::f64::consts::E;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{tail_report_from_ladder, Certificate, Condition, StatementKind, TailReport};
use crate::error::{Error, Result};
use crate::montecarlo::mean_and_stderr;
use crate::rng::{std_normal_point, StreamFactory};
use crate::space::{Accumulator, MultilinearPolynomial};

/// Constant of the log-Sobolev exponential-moment statement: 1/(8 e).
pub const LSI_CONSTANT: f64 = 1.0 / (8.0 * E);

/// Dense-entry budget for hypermatrices (n^d entries).
const ENTRY_BUDGET: u128 = 1 << 24;

/// Symmetry tolerance, relative to the largest entry magnitude.
const SYMMETRY_TOL: f64 = 1e-12;

const POWER_RESTARTS: u64 = 32;
const POWER_ITERS: usize = 500;
const POWER_TOL: f64 = 1e-10;
/// Fixed internal seed so power-iteration restarts are deterministic.
const POWER_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Dense symmetric order-d hypermatrix over `[n]^d` with constant entries.
///
/// Indices are 1-based, matching coordinate labels elsewhere.  Symmetry
/// under index permutation is validated at construction.
#[derive(Clone, Debug)]
pub struct ConstantHypermatrix {
    n: usize,
    d: usize,
    entries: Vec<f64>,
}

fn for_each_index(n: usize, d: usize, mut visit: impl FnMut(usize, &[usize])) {
    // Little-endian odometer over 0-based digits; offset = sum digits[s] n^s.
    let mut digits = vec![0usize; d];
    let total = n.pow(d as u32);
    for offset in 0..total {
        visit(offset, &digits);
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit < n {
                break;
            }
            *digit = 0;
        }
    }
}

impl ConstantHypermatrix {
    pub fn new(n: usize, d: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidOrder {
                reason: format!("hypermatrix needs n >= 1 and d >= 1, got n = {n}, d = {d}"),
            });
        }
        let count = (n as u128).saturating_pow(d as u32);
        if count > ENTRY_BUDGET {
            return Err(Error::EnumerationTooLarge {
                outcomes: count,
                budget: ENTRY_BUDGET,
            });
        }
        if entries.len() as u128 != count {
            return Err(Error::DimensionMismatch {
                reason: format!(
                    "expected {count} entries for n = {n}, d = {d}, got {}",
                    entries.len()
                ),
            });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                context: "hypermatrix entry".into(),
            });
        }
        let hm = Self { n, d, entries };
        hm.check_symmetry()?;
        Ok(hm)
    }

    /// Builds from a function of the (1-based) index tuple and validates.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(n: usize, d: usize, mut f: F) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidOrder {
                reason: format!("hypermatrix needs n >= 1 and d >= 1, got n = {n}, d = {d}"),
            });
        }
        let count = (n as u128).saturating_pow(d as u32);
        if count > ENTRY_BUDGET {
            return Err(Error::EnumerationTooLarge {
                outcomes: count,
                budget: ENTRY_BUDGET,
            });
        }
        let mut entries = Vec::with_capacity(count as usize);
        let mut index = vec![0usize; d];
        for_each_index(n, d, |_, digits| {
            for (slot, &digit) in index.iter_mut().zip(digits) {
                *slot = digit + 1;
            }
            entries.push(f(&index));
        });
        Self::new(n, d, entries)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry at a 1-based index tuple of length `order`.
    pub fn entry(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.d, "index tuple length must equal the order");
        let mut offset = 0;
        let mut stride = 1;
        for &i in index {
            assert!((1..=self.n).contains(&i), "index {i} out of range 1..={}", self.n);
            offset += (i - 1) * stride;
            stride *= self.n;
        }
        self.entries[offset]
    }

    fn check_symmetry(&self) -> Result<()> {
        let max_abs = self.entries.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let tol = SYMMETRY_TOL * max_abs.max(1.0);
        let mut deviation = 0.0_f64;
        let mut sorted = vec![0usize; self.d];
        for_each_index(self.n, self.d, |offset, digits| {
            sorted.copy_from_slice(digits);
            sorted.sort_unstable();
            let mut canon = 0;
            let mut stride = 1;
            for &digit in &sorted {
                canon += digit * stride;
                stride *= self.n;
            }
            deviation = deviation.max((self.entries[offset] - self.entries[canon]).abs());
        });
        if deviation > tol {
            return Err(Error::NotSymmetric { deviation, tol });
        }
        Ok(())
    }

    /// Full contraction `A[v, ..., v]`.
    pub fn form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.n, "vector length must equal the dimension");
        let mut acc = Accumulator::new();
        for_each_index(self.n, self.d, |offset, digits| {
            let e = self.entries[offset];
            if e != 0.0 {
                let mut term = e;
                for &digit in digits {
                    term *= v[digit];
                }
                acc.add(term);
            }
        });
        acc.value()
    }

    /// Contraction in every slot but the first: `w_j = A[e_j, v, ..., v]`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        for_each_index(self.n, self.d, |offset, digits| {
            let e = self.entries[offset];
            if e != 0.0 {
                let mut term = e;
                for &digit in &digits[1..] {
                    term *= v[digit];
                }
                w[digits[0]] += term;
            }
        });
        w
    }
}

/// Euclidean norm over all `n^d` entries.
pub fn tensor_hs_norm(a: &ConstantHypermatrix) -> f64 {
    let mut acc = Accumulator::new();
    for e in a.entries() {
        acc.add(e * e);
    }
    acc.value().sqrt()
}

/// Largest `|entry|` over strictly increasing index tuples (0 when the
/// dimension is below the order).
pub fn tensor_max_norm(a: &ConstantHypermatrix) -> f64 {
    let mut best = 0.0_f64;
    let mut index: Vec<usize> = (1..=a.order()).collect();
    if a.order() > a.dim() {
        return 0.0;
    }
    loop {
        best = best.max(a.entry(&index).abs());
        // Advance to the next strictly increasing tuple.
        let d = index.len();
        let mut s = d;
        loop {
            if s == 0 {
                return best;
            }
            s -= 1;
            if index[s] < a.dim() - (d - 1 - s) {
                index[s] += 1;
                for j in s + 1..d {
                    index[j] = index[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-300 {
        return false;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    true
}

fn spectral_norm_symmetric(a: &ConstantHypermatrix) -> f64 {
    let n = a.dim();
    let m = DMatrix::from_fn(n, n, |r, c| a.entries()[r + c * n]);
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |best, ev| best.max(ev.abs()))
}

fn shifted_power_norm(a: &ConstantHypermatrix) -> f64 {
    let hs = tensor_hs_norm(a);
    if hs == 0.0 {
        return 0.0;
    }
    let n = a.dim();
    // Shift large enough to make the iteration monotone on the sphere.
    let alpha = (a.order() as f64 - 1.0) * hs;
    let factory = StreamFactory::new(POWER_SEED);
    (0..2 * POWER_RESTARTS)
        .into_par_iter()
        .map(|restart| {
            let sign = if restart < POWER_RESTARTS { 1.0 } else { -1.0 };
            let mut rng = factory.stream(restart);
            let mut v = Vec::with_capacity(n);
            std_normal_point(&mut rng, n, &mut v);
            if !normalize(&mut v) {
                v = vec![0.0; n];
                v[0] = 1.0;
            }
            let mut lambda = sign * a.form(&v);
            for _ in 0..POWER_ITERS {
                let mut w = a.apply(&v);
                for (wj, &vj) in w.iter_mut().zip(v.iter()) {
                    *wj = sign * *wj + alpha * vj;
                }
                if !normalize(&mut w) {
                    break;
                }
                v.copy_from_slice(&w);
                let next = sign * a.form(&v);
                let done = (next - lambda).abs() <= POWER_TOL * lambda.abs().max(1.0);
                lambda = next;
                if done {
                    break;
                }
            }
            // |A[v,...,v]| at a feasible point is a valid lower bound.
            lambda.abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Operator norm `sup { |A[v_1, ..., v_d]| : |v_i| = 1 }` of a symmetric
/// hypermatrix (equivalently `sup |A[v, ..., v]|`).  Exact for orders 1
/// (Euclidean norm) and 2 (symmetric eigensolve); for order >= 3 a shifted
/// power iteration over 32 deterministic restarts returns a certified
/// lower bound (the HS norm is always an upper bound).
pub fn tensor_op_norm(a: &ConstantHypermatrix) -> f64 {
    match a.order() {
        1 => a.entries().iter().map(|e| e * e).sum::<f64>().sqrt(),
        2 => spectral_norm_symmetric(a),
        _ => shifted_power_norm(a),
    }
}

/// Power-iteration path regardless of order (order >= 2); used to
/// cross-check the exact order-2 eigensolve.
pub fn tensor_op_norm_power(a: &ConstantHypermatrix) -> Result<f64> {
    if a.order() < 2 {
        return Err(Error::InvalidOrder {
            reason: "power iteration needs order >= 2".into(),
        });
    }
    Ok(shifted_power_norm(a))
}

/// Order-k derivative of a multilinear polynomial, as a hypermatrix-valued
/// function of the evaluation point.
#[derive(Clone, Debug)]
pub struct DerivativeTensor {
    poly: MultilinearPolynomial,
    k: usize,
    constant: bool,
}

/// Builds the order-k derivative of `p`.  The entry at a tuple of distinct
/// coordinates `(i_1, ..., i_k)` is `sum over monomials I containing all
/// of them of a_I * prod_{j in I minus the tuple} x_j`; tuples with
/// repeated coordinates give 0 (multilinearity).
pub fn poly_derivative_tensor(p: &MultilinearPolynomial, k: usize) -> Result<DerivativeTensor> {
    let n = p.n_vars();
    if k == 0 || k > n {
        return Err(Error::InvalidOrder {
            reason: format!("derivative order k = {k} must satisfy 1 <= k <= {n}"),
        });
    }
    Ok(DerivativeTensor {
        constant: p.degree() <= k,
        poly: p.clone(),
        k,
    })
}

impl DerivativeTensor {
    pub fn order(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.poly.n_vars()
    }

    /// True when the derivative does not depend on the evaluation point
    /// (the polynomial degree is at most the derivative order).
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// Evaluates the derivative hypermatrix at `x`.
    pub fn at(&self, x: &[f64]) -> Result<ConstantHypermatrix> {
        let n = self.poly.n_vars();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                reason: format!("point has {} coordinates, polynomial has {n}", x.len()),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "derivative evaluation point".into(),
            });
        }
        ConstantHypermatrix::from_fn(n, self.k, |index| {
            let repeated = index
                .iter()
                .enumerate()
                .any(|(a, i)| index[..a].contains(i));
            if repeated {
                return 0.0;
            }
            let mut acc = 0.0;
            for (monomial, a) in self.poly.terms() {
                if index.iter().all(|i| monomial.contains(i)) {
                    let mut term = a;
                    for &j in monomial {
                        if !index.contains(&j) {
                            term *= x[j - 1];
                        }
                    }
                    acc += term;
                }
            }
            acc
        })
    }
}

/// Monte Carlo estimate of `||f^(k)||_{Op,2} = (E |f^(k)(X)|_Op^2)^(1/2)`
/// under standard Gaussian `X`, with delta-method standard error.
/// Constant derivatives short-circuit to the exact value with stderr 0.
/// Deterministic given `(n_samples, seed)`.
pub fn gaussian_norm_estimate(
    p: &MultilinearPolynomial,
    k: usize,
    n_samples: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidSampling {
            reason: format!("need at least 100 samples, got {n_samples}"),
        });
    }
    let deriv = poly_derivative_tensor(p, k)?;
    let n = p.n_vars();
    if deriv.is_constant() {
        let tensor = deriv.at(&vec![0.0; n])?;
        return Ok((tensor_op_norm(&tensor), 0.0));
    }
    let factory = StreamFactory::new(seed);
    let (mean_sq, se_sq) = mean_and_stderr(n_samples, |i| {
        let mut rng = factory.stream(i);
        let mut point = Vec::with_capacity(n);
        std_normal_point(&mut rng, n, &mut point);
        let tensor = deriv.at(&point).expect("validated dimensions");
        let op = tensor_op_norm(&tensor);
        op * op
    });
    let value = mean_sq.max(0.0).sqrt();
    let stderr = if value > 0.0 { se_sq / (2.0 * value) } else { 0.0 };
    Ok((value, stderr))
}

// ---------------------------------------------------------------------------
// norm records and certificates
// ---------------------------------------------------------------------------

/// Where a norm value came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Provenance {
    /// Computed exactly (constant derivative tensor).
    Exact,
    /// Supplied by the caller, taken on trust.
    Declared,
    /// Monte Carlo estimate; `stderr` is recorded on the value.
    MonteCarlo { samples: u64, seed: u64 },
}

/// One norm value with its provenance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormValue {
    pub value: f64,
    pub stderr: Option<f64>,
    pub provenance: Provenance,
}

impl NormValue {
    fn validated(value: f64, stderr: Option<f64>, provenance: Provenance) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidParameter {
                reason: format!("norm value {value} must be finite and >= 0"),
            });
        }
        if let Some(se) = stderr {
            if !se.is_finite() || se < 0.0 {
                return Err(Error::InvalidParameter {
                    reason: format!("standard error {se} must be finite and >= 0"),
                });
            }
        }
        Ok(Self {
            value,
            stderr,
            provenance,
        })
    }

    pub fn exact(value: f64) -> Result<Self> {
        Self::validated(value, None, Provenance::Exact)
    }

    pub fn declared(value: f64) -> Result<Self> {
        Self::validated(value, None, Provenance::Declared)
    }

    pub fn monte_carlo(value: f64, stderr: f64, samples: u64, seed: u64) -> Result<Self> {
        Self::validated(value, Some(stderr), Provenance::MonteCarlo { samples, seed })
    }
}

/// Smooth-function norm inputs for the continuous certificates:
/// `||f^(k)||_{Op,2}` for `k < order`, plus the order-d sup operator norm
/// and optionally the order-d HS norm.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothNorms {
    pub order: usize,
    /// Index k-1 holds the order-k value; length is `order - 1`.
    pub op2: Vec<NormValue>,
    pub op_inf: Option<NormValue>,
    pub hs2: Option<NormValue>,
}

impl SmoothNorms {
    pub fn new(
        order: usize,
        op2: Vec<NormValue>,
        op_inf: Option<NormValue>,
        hs2: Option<NormValue>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder {
                reason: "norm record needs order >= 1".into(),
            });
        }
        if op2.len() != order - 1 {
            return Err(Error::DimensionMismatch {
                reason: format!(
                    "expected {} lower-order Op-L2 values for order {order}, got {}",
                    order - 1,
                    op2.len()
                ),
            });
        }
        Ok(Self {
            order,
            op2,
            op_inf,
            hs2,
        })
    }

    fn require_op_inf(&self) -> Result<&NormValue> {
        self.op_inf.as_ref().ok_or_else(|| Error::MissingNorm {
            slot: "op_inf".into(),
        })
    }

    fn require_hs2(&self) -> Result<&NormValue> {
        self.hs2.as_ref().ok_or_else(|| Error::MissingNorm {
            slot: "hs2".into(),
        })
    }
}

/// Computes the full norm record of a multilinear polynomial under the
/// standard Gaussian: exact values where the derivative is constant, Monte
/// Carlo estimates elsewhere (per-order seeds derived from `seed`).  The
/// order-d derivative must be constant, otherwise its sup norm is infinite.
pub fn gaussian_smooth_norms(
    p: &MultilinearPolynomial,
    d: usize,
    n_samples: u64,
    seed: u64,
) -> Result<SmoothNorms> {
    let top = poly_derivative_tensor(p, d)?;
    if !top.is_constant() {
        return Err(Error::InvalidParameter {
            reason: format!(
                "the order-{d} derivative is not constant (degree {} polynomial); \
                 its sup operator norm is unbounded under a Gaussian — supply norms directly",
                p.degree()
            ),
        });
    }
    let mut op2 = Vec::with_capacity(d - 1);
    for k in 1..d {
        let deriv = poly_derivative_tensor(p, k)?;
        if deriv.is_constant() {
            let tensor = deriv.at(&vec![0.0; p.n_vars()])?;
            op2.push(NormValue::exact(tensor_op_norm(&tensor))?);
        } else {
            let order_seed = seed.wrapping_add(k as u64);
            let (value, stderr) = gaussian_norm_estimate(p, k, n_samples, order_seed)?;
            op2.push(NormValue::monte_carlo(value, stderr, n_samples, order_seed)?);
        }
    }
    let tensor = top.at(&vec![0.0; p.n_vars()])?;
    SmoothNorms::new(
        d,
        op2,
        Some(NormValue::exact(tensor_op_norm(&tensor))?),
        Some(NormValue::exact(tensor_hs_norm(&tensor))?),
    )
}

/// Which hypothesis set the log-Sobolev certificate checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsiVariant {
    /// `||f^(k)||_{Op,2} <= min(1, sigma^(d-k))` for `k < d` and
    /// `||f^(d)||_{Op,inf} <= 1`.
    OpConditions,
    /// `||f^(d)||_{HS,2} <= 1` and `||f^(d)||_{Op,inf} <= 1`, assuming
    /// centered partial derivatives (attested by the caller).
    HsConditions,
}

fn reject_failed(conditions: &[Condition]) -> Result<()> {
    let failed: Vec<String> = conditions
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::ConditionsFailed { failed })
    }
}

/// Certificate for a measure satisfying a log-Sobolev inequality with
/// constant `sigma2`: on pass, `integral of exp((c/sigma2) |f|^(2/d)) <= 2`
/// with `c = 1/(8 e)`.  The exponential moment is not enumerable here;
/// validate by sampling.
pub fn lsi_certificate(
    norms: &SmoothNorms,
    sigma2: f64,
    d: usize,
    variant: LsiVariant,
) -> Result<Certificate> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("log-Sobolev constant sigma2 = {sigma2} must be a finite positive real"),
        });
    }
    if d != norms.order {
        return Err(Error::InvalidOrder {
            reason: format!("certificate order {d} does not match the norm record ({})", norms.order),
        });
    }
    let sigma = sigma2.sqrt();
    let mut conditions = Vec::new();
    let mut notes = Vec::new();
    match variant {
        LsiVariant::OpConditions => {
            for (k, nv) in (1..d).zip(&norms.op2) {
                let threshold = sigma.powi((d - k) as i32).min(1.0);
                conditions.push(Condition::new(format!("op2_order_{k}"), nv.value, threshold));
            }
            conditions.push(Condition::new(
                "op_inf".into(),
                norms.require_op_inf()?.value,
                1.0,
            ));
        }
        LsiVariant::HsConditions => {
            conditions.push(Condition::new("hs2".into(), norms.require_hs2()?.value, 1.0));
            conditions.push(Condition::new(
                "op_inf".into(),
                norms.require_op_inf()?.value,
                1.0,
            ));
            notes.push(
                "assumes centered partial derivatives of orders below d (caller attestation, not verified)"
                    .to_string(),
            );
        }
    }
    reject_failed(&conditions)?;
    notes.push("continuous-measure statement; the exponential moment is validated by sampling".into());
    Ok(Certificate {
        statement: StatementKind::Smooth,
        order: d,
        constant: LSI_CONSTANT,
        scale: sigma,
        rate: LSI_CONSTANT / sigma2,
        bound: 2.0,
        conditions,
        exact_moment: None,
        notes,
    })
}

/// Tail bound in the log-Sobolev setting:
/// `P(|f| >= t) <= e^2 exp(-eta / (d e)^2)` with
/// `eta = min(t^(2/d) / (sigma2 op_inf^(2/d)), min_{k<d} t^(2/k) / (sigma2 op2_k^(2/k)))`.
pub fn continuous_tail(norms: &SmoothNorms, sigma2: f64, d: usize, t: f64) -> Result<TailReport> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("log-Sobolev constant sigma2 = {sigma2} must be a finite positive real"),
        });
    }
    if d != norms.order {
        return Err(Error::InvalidOrder {
            reason: format!("tail order {d} does not match the norm record ({})", norms.order),
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("threshold t = {t} must be a finite nonnegative real"),
        });
    }
    let sigma = sigma2.sqrt();
    let mut ladder = Vec::with_capacity(d);
    for (k, nv) in (1..d).zip(&norms.op2) {
        ladder.push((k, sigma.powi(k as i32) * nv.value));
    }
    ladder.push((d, sigma.powi(d as i32) * norms.require_op_inf()?.value));
    let divisor = (d as f64 * E) * (d as f64 * E);
    Ok(tail_report_from_ladder(&ladder, d, t, divisor))
}

/// Certificate for the uniform measure on the unit sphere in `R^n`:
/// checks `||f^(k)||_{Op,2} <= n^(-(d-k)/2)` for `k < d` and the sup
/// operator norm `<= 1`; on pass, the exponential moment of
/// `(n-1) |f|^(2/d) / (8 e)` is at most 2.
pub fn sphere_certificate(n: usize, d: usize, norms: &SmoothNorms) -> Result<Certificate> {
    if n < 2 {
        return Err(Error::InvalidParameter {
            reason: format!("sphere dimension n = {n} must be at least 2"),
        });
    }
    if d != norms.order {
        return Err(Error::InvalidOrder {
            reason: format!("certificate order {d} does not match the norm record ({})", norms.order),
        });
    }
    let nf = n as f64;
    let mut conditions = Vec::new();
    for (k, nv) in (1..d).zip(&norms.op2) {
        let threshold = nf.powf(-((d - k) as f64) / 2.0);
        conditions.push(Condition::new(format!("op2_order_{k}"), nv.value, threshold));
    }
    conditions.push(Condition::new(
        "sup_op".into(),
        norms.require_op_inf()?.value,
        1.0,
    ));
    reject_failed(&conditions)?;
    Ok(Certificate {
        statement: StatementKind::Sphere,
        order: d,
        constant: LSI_CONSTANT,
        scale: 1.0,
        rate: (nf - 1.0) * LSI_CONSTANT,
        bound: 2.0,
        conditions,
        exact_moment: None,
        notes: vec!["uniform measure on the unit sphere in R^n".into()],
    })
}
