//! Moment inequalities with explicit constants and exactly-verified
//! certificates.
//!
//! Everything here is checkable by finite enumeration: moment checks
//! return the two sides of the claimed inequality, and certificates carry
//! the exact exponential moment computed on the table next to the bound
//! of 2 it must stay under.  A certified inequality that fails numerically
//! is reported as [`Error::BoundViolated`] — a bug in this crate, never a
//! counterexample.
//!
//! Conventions shared by the certificate constructors:
//!
//! * `scale` is the joint normalizer `s = max(hs2 norms of orders < d,
//!   sup norm of order d)`; conditions are recorded after dividing by it.
//! * the certified statement is `E exp(rate * |target|^(2/d)) <= bound`,
//!   so [`Certificate::implied_tail_bound`] is `bound * exp(-rate *
//!   t^(2/d))` by Markov's inequality.

use std::f64::consts::{E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::diff_ops::{difference_tensor, sup_class_tensor, OperatorKind};
use crate::error::{Error, Result};
use crate::space::{
    build_space, eval_polynomial, Accumulator, FunctionTable, MultilinearPolynomial, SpaceRef,
};

/// Constant in the exponential-moment theorem: 1/(208 e).
pub const EXP_MOMENT_CONSTANT: f64 = 1.0 / (208.0 * E);

/// Numerator factor of the tail rate divisor `41 (d e)^2`.
pub const TAIL_RATE_FACTOR: f64 = 41.0;

/// Relative tolerance for treating a table as mean-zero.
pub const MEAN_TOL: f64 = 1e-12;

/// Default slack when checking that a proved inequality holds numerically.
pub const MARGIN_TOL: f64 = 1e-10;

/// Slack for the exact-moment self-check of emitted certificates.
const MOMENT_BUG_TOL: f64 = 1e-9;

/// `x^(2/d)` for `x >= 0`, exact for the common orders 1 and 2.
pub(crate) fn pow_2_over_d(x: f64, d: usize) -> f64 {
    match d {
        1 => x * x,
        2 => x,
        _ => x.powf(2.0 / d as f64),
    }
}

fn require_mean_zero(f: &FunctionTable) -> Result<()> {
    let scale = f.sup_norm();
    if scale == 0.0 {
        return Ok(());
    }
    let mean = f.mean();
    let tol = MEAN_TOL * scale;
    if mean.abs() <= tol {
        Ok(())
    } else {
        Err(Error::MeanNotZero { mean, tol })
    }
}

fn check_order(f: &FunctionTable, d: usize) -> Result<()> {
    let n = f.space().n_coords();
    if d == 0 || d > n {
        return Err(Error::InvalidOrder {
            reason: format!("order d = {d} must satisfy 1 <= d <= {n}"),
        });
    }
    Ok(())
}

fn check_exponent(p: f64, least: f64, what: &str) -> Result<()> {
    if !p.is_finite() || p < least {
        return Err(Error::InvalidParameter {
            reason: format!("{what} p = {p} must be a finite real >= {least}"),
        });
    }
    Ok(())
}

fn h_norm(f: &FunctionTable, k: usize, p: f64) -> Result<f64> {
    difference_tensor(f, OperatorKind::H, k)?.lp_norm(p)
}

fn signed_h_norm(f: &FunctionTable, kind: OperatorKind, p: f64) -> Result<f64> {
    difference_tensor(f, kind, 1)?.lp_norm(p)
}

// ---------------------------------------------------------------------------
// kappa constants
// ---------------------------------------------------------------------------

/// The constant family `kappa_p = (1 - (1 - 1/p)^(p/2))^(-1) / 2` together
/// with its limit `sqrt(e) / (2 (sqrt(e) - 1))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KappaConstants {
    pub p: f64,
    pub kappa_p: f64,
    pub kappa_limit: f64,
}

/// Limit of `kappa_p` as `p -> infinity`; strictly below 1.271.
pub fn kappa_limit() -> f64 {
    let s = E.sqrt();
    s / (2.0 * (s - 1.0))
}

/// Evaluates `kappa_p` for `p >= 1`.
pub fn kappa(p: f64) -> Result<KappaConstants> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidParameter {
            reason: format!("kappa is defined for finite p >= 1, got {p}"),
        });
    }
    let kappa_p = 0.5 / (1.0 - (1.0 - 1.0 / p).powf(p / 2.0));
    Ok(KappaConstants {
        p,
        kappa_p,
        kappa_limit: kappa_limit(),
    })
}

// ---------------------------------------------------------------------------
// moment checks
// ---------------------------------------------------------------------------

/// One verified inequality: `lhs <= rhs` up to a small relative slack.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentMargin {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative (up to slack) when the inequality holds.
    pub margin: f64,
    pub holds: bool,
}

impl MomentMargin {
    fn check(lhs: f64, rhs: f64, tol: f64) -> Self {
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        Self {
            lhs,
            rhs,
            margin,
            holds: margin >= -tol * scale,
        }
    }
}

/// Margins for the one-sided upper and lower deviation inequalities.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SignedMargins {
    pub plus: MomentMargin,
    pub minus: MomentMargin,
}

/// One-sided moment bounds for the centered function: `||(f - E f)+||_p <=
/// sqrt(8 kappa p) ||h+ f||_p` and the mirror statement with minus parts.
pub fn signed_moment_check(f: &FunctionTable, p: f64) -> Result<SignedMargins> {
    check_exponent(p, 2.0, "moment exponent")?;
    let g = f.add_scalar(-f.mean());
    let factor = (8.0 * kappa_limit() * p).sqrt();
    let plus = MomentMargin::check(
        g.pos_part().lp_norm(p)?,
        factor * signed_h_norm(f, OperatorKind::HPlus, p)?,
        MARGIN_TOL,
    );
    let minus = MomentMargin::check(
        g.neg_part().lp_norm(p)?,
        factor * signed_h_norm(f, OperatorKind::HMinus, p)?,
        MARGIN_TOL,
    );
    Ok(SignedMargins { plus, minus })
}

/// Two-sided moment bound: `sqrt(32 kappa p) ||h f||_p` for mean-zero `f`,
/// with the additive `||f||_2` term otherwise.  The returned value is
/// checked to dominate `||f||_p`.
pub fn centered_moment_bound(f: &FunctionTable, p: f64) -> Result<f64> {
    check_exponent(p, 2.0, "moment exponent")?;
    let hnorm = h_norm(f, 1, p)?;
    let a = (32.0 * kappa_limit() * p).sqrt();
    let scale = f.sup_norm();
    let mean_zero = scale == 0.0 || f.mean().abs() <= MEAN_TOL * scale;
    let bound = if mean_zero {
        a * hnorm
    } else {
        f.lp_norm(2.0)? + a * hnorm
    };
    let lhs = f.lp_norm(p)?;
    if lhs > bound + MARGIN_TOL * bound.max(1.0) {
        return Err(Error::BoundViolated {
            name: "centered moment bound".into(),
            lhs,
            rhs: bound,
        });
    }
    Ok(bound)
}

/// Iterated moment bound for mean-zero `f`:
/// `||f||_p <= sum_{k<d} A^k ||h^(k) f||_{HS,2} + A^d ||h^(d) f||_{HS,p}`
/// with `A = sqrt(32 kappa p)`.  The returned value is checked to dominate
/// `||f||_p`.
pub fn iterated_moment_bound(f: &FunctionTable, d: usize, p: f64) -> Result<f64> {
    check_order(f, d)?;
    check_exponent(p, 2.0, "moment exponent")?;
    require_mean_zero(f)?;
    let a = (32.0 * kappa_limit() * p).sqrt();
    let mut bound = 0.0;
    for k in 1..d {
        bound += a.powi(k as i32) * h_norm(f, k, 2.0)?;
    }
    bound += a.powi(d as i32) * h_norm(f, d, p)?;
    let lhs = f.lp_norm(p)?;
    if lhs > bound + MARGIN_TOL * bound.max(1.0) {
        return Err(Error::BoundViolated {
            name: "iterated moment bound".into(),
            lhs,
            rhs: bound,
        });
    }
    Ok(bound)
}

/// Moment recursion for the positive part of the centered function:
/// `||g+||_p^p <= ||g+||_{p-1}^p + 4 (p-1) ||h+ f||_p^2 ||g+||_p^(p-2)`.
pub fn moment_recursion_check(f: &FunctionTable, p: f64) -> Result<MomentMargin> {
    check_exponent(p, 2.0, "recursion exponent")?;
    let g = f.add_scalar(-f.mean()).pos_part();
    let hplus = signed_h_norm(f, OperatorKind::HPlus, p)?;
    let gp = g.lp_norm(p)?;
    let lhs = gp.powf(p);
    let rhs = g.lp_norm(p - 1.0)?.powf(p) + 4.0 * (p - 1.0) * hplus * hplus * gp.powf(p - 2.0);
    Ok(MomentMargin::check(lhs, rhs, 1e-9))
}

/// Subadditivity of the q-th moment deviation functional, `q` in `(1, 2]`:
/// `E|g|^q - (E|g|)^q <= E sum_i (E_i |g|^q - (E_i |g|)^q)`.
pub fn tensorization_check(g: &FunctionTable, q: f64) -> Result<MomentMargin> {
    if !q.is_finite() || q <= 1.0 || q > 2.0 {
        return Err(Error::InvalidParameter {
            reason: format!("tensorization exponent q = {q} must lie in (1, 2]"),
        });
    }
    let a = g.abs();
    let aq = a.map(|v| v.powf(q));
    let lhs = aq.mean() - a.mean().powf(q);
    let mut total = FunctionTable::zero(g.space().clone());
    for i in 1..=g.space().n_coords() {
        let ei_aq = aq.cond_expectation(&[i])?;
        let ei_a_q = a.cond_expectation(&[i])?.map(|v| v.powf(q));
        total = total.add(&ei_aq.sub(&ei_a_q)?)?;
    }
    Ok(MomentMargin::check(lhs, total.mean(), 1e-10))
}

/// The two L2 inequalities for mean-zero `f`: `||f||_2 <= sqrt(2) ||h f||_2`
/// and `||f+||_2 <= 2 ||h+ f||_2`.
pub fn l2_bounds_check(f: &FunctionTable) -> Result<(MomentMargin, MomentMargin)> {
    require_mean_zero(f)?;
    let two_sided = MomentMargin::check(
        f.lp_norm(2.0)?,
        SQRT_2 * h_norm(f, 1, 2.0)?,
        MARGIN_TOL,
    );
    let one_sided = MomentMargin::check(
        f.pos_part().lp_norm(2.0)?,
        2.0 * signed_h_norm(f, OperatorKind::HPlus, 2.0)?,
        MARGIN_TOL,
    );
    Ok((two_sided, one_sided))
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

/// A normalized hypothesis of a certificate; `pass` means `lhs <= threshold`
/// up to float rounding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Condition {
    pub(crate) fn new(name: String, lhs: f64, threshold: f64) -> Self {
        let pass = lhs <= threshold * (1.0 + 1e-12);
        Self {
            name,
            lhs,
            threshold,
            pass,
        }
    }
}

/// Which theorem a certificate instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    ExpMoment,
    SupClass,
    UStat,
    Smooth,
    Sphere,
}

/// An exponential-moment certificate.
///
/// The certified statement is `E exp(rate * |target|^(2/order)) <= bound`.
/// When the target lives on an enumerable space the moment is evaluated
/// exactly and stored in `exact_moment`; continuous statements leave it
/// `None` and are validated by sampling instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub statement: StatementKind,
    pub order: usize,
    /// Constant of the underlying theorem (e.g. 1/(208 e)).
    pub constant: f64,
    /// Joint normalizer of the difference-tensor norms.
    pub scale: f64,
    /// Coefficient of `|target|^(2/order)` inside the exponential.
    pub rate: f64,
    /// Upper bound for the exponential moment (2 for every statement here).
    pub bound: f64,
    pub conditions: Vec<Condition>,
    pub exact_moment: Option<f64>,
    pub notes: Vec<String>,
}

impl Certificate {
    /// Markov consequence: `P(|target| >= t) <= bound * exp(-rate * t^(2/d))`.
    pub fn implied_tail_bound(&self, t: f64) -> f64 {
        if self.scale == 0.0 {
            // Zero target: the tail is empty for positive thresholds.
            return if t > 0.0 { 0.0 } else { self.bound };
        }
        if t <= 0.0 {
            return self.bound;
        }
        self.bound * (-self.rate * pow_2_over_d(t, self.order)).exp()
    }
}

fn exp_moment_value(f: &FunctionTable, rate: f64, d: usize) -> f64 {
    f.map(|v| (rate * pow_2_over_d(v.abs(), d)).exp()).mean()
}

/// Norm ladder used by the certificate constructors: HS-L2 norms below the
/// top order, HS-sup norm at the top.
fn norm_ladder(f: &FunctionTable, d: usize) -> Result<Vec<(String, f64)>> {
    let mut norms = Vec::with_capacity(d);
    for k in 1..d {
        norms.push((format!("hs2_norm_order_{k}"), h_norm(f, k, 2.0)?));
    }
    norms.push((
        format!("hs_sup_norm_order_{d}"),
        h_norm(f, d, f64::INFINITY)?,
    ));
    Ok(norms)
}

fn normalized_conditions(norms: &[(String, f64)], s: f64) -> Vec<Condition> {
    norms
        .iter()
        .map(|(name, v)| Condition::new(name.clone(), v / s, 1.0))
        .collect()
}

fn certify_moment(
    statement: StatementKind,
    target: &FunctionTable,
    d: usize,
    norms: Vec<(String, f64)>,
    notes: Vec<String>,
) -> Result<Certificate> {
    let s = norms.iter().fold(0.0_f64, |m, (_, v)| m.max(*v));
    let constant = EXP_MOMENT_CONSTANT;
    if s == 0.0 {
        return Ok(Certificate {
            statement,
            order: d,
            constant,
            scale: 0.0,
            rate: 0.0,
            bound: 2.0,
            conditions: Vec::new(),
            exact_moment: Some(1.0),
            notes: with_note(
                notes,
                "all difference-tensor norms vanish; the target is constant and the moment is exactly 1",
            ),
        });
    }
    let rate = constant / pow_2_over_d(s, d);
    let exact = exp_moment_value(target, rate, d);
    if exact > 2.0 + MOMENT_BUG_TOL {
        return Err(Error::BoundViolated {
            name: "certificate exponential moment".into(),
            lhs: exact,
            rhs: 2.0,
        });
    }
    Ok(Certificate {
        statement,
        order: d,
        constant,
        scale: s,
        rate,
        bound: 2.0,
        conditions: normalized_conditions(&norms, s),
        exact_moment: Some(exact),
        notes,
    })
}

fn with_note(mut notes: Vec<String>, note: &str) -> Vec<String> {
    notes.push(note.to_string());
    notes
}

/// Exponential-moment certificate for a mean-zero function of enumeration
/// order `d`: after joint rescaling by `s`, `E exp(c |f/s|^(2/d)) <= 2`
/// with `c = 1/(208 e)`.  The moment is evaluated exactly on the table.
pub fn exp_moment_certificate(f: &FunctionTable, d: usize) -> Result<Certificate> {
    check_order(f, d)?;
    require_mean_zero(f)?;
    let norms = norm_ladder(f, d)?;
    certify_moment(StatementKind::ExpMoment, f, d, norms, Vec::new())
}

/// Tail bound derived from the difference-tensor norms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailReport {
    pub t: f64,
    pub order: usize,
    /// `min_k (t / norm_k)^(2/k)` over the norm ladder (infinite when all
    /// norms vanish and `t > 0`).
    pub eta: f64,
    /// Divisor of `eta` inside the exponential, `41 (d e)^2` here.
    pub rate_divisor: f64,
    /// `e^2 exp(-eta / rate_divisor)`.
    pub bound: f64,
    /// `min(bound, 1)`.
    pub probability_bound: f64,
}

pub(crate) fn tail_report_from_ladder(
    norms: &[(usize, f64)],
    d: usize,
    t: f64,
    rate_divisor: f64,
) -> TailReport {
    let mut eta = f64::INFINITY;
    if t == 0.0 {
        eta = 0.0;
    } else {
        for &(k, nk) in norms {
            if nk > 0.0 {
                eta = eta.min(pow_2_over_d(t / nk, k));
            }
        }
    }
    let bound = E * E * (-eta / rate_divisor).exp();
    TailReport {
        t,
        order: d,
        eta,
        rate_divisor,
        bound,
        probability_bound: bound.min(1.0),
    }
}

/// Tail certificate `P(|f| >= t) <= e^2 exp(-eta_f(t) / (41 (d e)^2))`
/// where `eta_f(t)` is the best exponent offered by the norm ladder.
pub fn tail_certificate(f: &FunctionTable, d: usize, t: f64) -> Result<TailReport> {
    check_order(f, d)?;
    require_mean_zero(f)?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("threshold t = {t} must be a finite nonnegative real"),
        });
    }
    let mut ladder = Vec::with_capacity(d);
    for k in 1..d {
        ladder.push((k, h_norm(f, k, 2.0)?));
    }
    ladder.push((d, h_norm(f, d, f64::INFINITY)?));
    let divisor = TAIL_RATE_FACTOR * (d as f64 * E) * (d as f64 * E);
    Ok(tail_report_from_ladder(&ladder, d, t, divisor))
}

/// Certificate for the supremum of a finite class: the target is
/// `sup_j |f_j| - E sup_j |f_j|` and the norm ladder is built from the
/// entrywise suprema of the class tensors.
pub fn sup_certificate(fs: &[FunctionTable], d: usize) -> Result<Certificate> {
    if fs.is_empty() {
        return Err(Error::EmptyInput {
            reason: "supremum certificate needs at least one function".into(),
        });
    }
    check_order(&fs[0], d)?;
    let mut norms = Vec::with_capacity(d);
    for k in 1..d {
        norms.push((
            format!("sup_class_hs2_order_{k}"),
            sup_class_tensor(fs, k)?.lp_norm(2.0)?,
        ));
    }
    norms.push((
        format!("sup_class_hs_sup_order_{d}"),
        sup_class_tensor(fs, d)?.lp_norm(f64::INFINITY)?,
    ));
    let mut sup_vals: Vec<f64> = fs[0].values().iter().map(|v| v.abs()).collect();
    for f in &fs[1..] {
        for (acc, &v) in sup_vals.iter_mut().zip(f.values()) {
            *acc = acc.max(v.abs());
        }
    }
    let g = FunctionTable::from_values(fs[0].space().clone(), sup_vals)?;
    let target = g.add_scalar(-g.mean());
    let notes = vec![
        "the supremum statement's universal constant is existential; this certificate reuses the exponential-moment constant 1/(208 e), which the iterated moment bound supports"
            .to_string(),
    ];
    certify_moment(StatementKind::SupClass, &target, d, norms, notes)
}

// ---------------------------------------------------------------------------
// U-statistics
// ---------------------------------------------------------------------------

/// Tolerance (relative to the kernel sup-norm) for complete degeneracy.
pub const KERNEL_DEGENERACY_TOL: f64 = 1e-10;

fn ordered_distinct_tuples(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(d);
    fn rec(n: usize, d: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == d {
            out.push(current.clone());
            return;
        }
        for i in 1..=n {
            if !current.contains(&i) {
                current.push(i);
                rec(n, d, current, out);
                current.pop();
            }
        }
    }
    rec(n, d, &mut current, &mut out);
    out
}

/// Builds the U-statistic `f = (n-d)!/n! * sum over ordered distinct
/// d-tuples of h(x_{i_1}, ..., x_{i_d})` as a table on the n-fold product
/// of the kernel's (common) marginal.
///
/// The kernel must have identically distributed coordinates and be
/// completely degenerate: `E_i h = 0` for every coordinate.
pub fn ustat_build(kernel: &FunctionTable, n: usize) -> Result<FunctionTable> {
    let d = kernel.space().n_coords();
    if n < d {
        return Err(Error::InvalidParameter {
            reason: format!("number of variables n = {n} is below the kernel arity d = {d}"),
        });
    }
    let marginal = kernel.space().coord(1).clone();
    for i in 2..=d {
        if kernel.space().coord(i) != &marginal {
            return Err(Error::DimensionMismatch {
                reason: "kernel coordinates must share one marginal distribution".into(),
            });
        }
    }
    let sup = kernel.sup_norm();
    for i in 1..=d {
        let mass = kernel.cond_expectation(&[i])?.sup_norm();
        if mass > KERNEL_DEGENERACY_TOL * sup {
            return Err(Error::KernelNotDegenerate { coord: i, mass });
        }
    }
    let space = build_space(vec![marginal; n])?;
    let mut coefficient = 1.0;
    for j in 0..d {
        coefficient /= (n - j) as f64;
    }
    let tuples = ordered_distinct_tuples(n, d);
    let kstrides: Vec<usize> = (1..=d).map(|s| kernel.space().stride(s)).collect();
    let mut values = vec![0.0; space.n_outcomes()];
    {
        use rayon::prelude::*;
        let space_ref = &space;
        values
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, slot)| {
                let mut acc = Accumulator::new();
                for tuple in &tuples {
                    let mut kidx = 0;
                    for (s, &i) in tuple.iter().enumerate() {
                        kidx += space_ref.digit(idx, i) * kstrides[s];
                    }
                    acc.add(kernel.value(kidx));
                }
                *slot = coefficient * acc.value();
            });
    }
    FunctionTable::from_values(space, values)
}

/// Certificate for a completely degenerate, bounded U-statistic:
/// `E exp(c_n * n * |f|^(2/d)) <= 2` with `c_n = c_0 / (n * s^(2/d))`,
/// where `s` is the norm ladder maximum of the built statistic and
/// `c_0 = 1/(208 e)`.  The (d, M) dependence of `c_n` is reported in the
/// notes, not assumed.
pub fn ustat_certificate(
    kernel: &FunctionTable,
    n: usize,
    d: usize,
    m_bound: f64,
) -> Result<Certificate> {
    let arity = kernel.space().n_coords();
    if d != arity {
        return Err(Error::InvalidOrder {
            reason: format!("declared order d = {d} does not match the kernel arity {arity}"),
        });
    }
    if !m_bound.is_finite() || m_bound <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("kernel bound M = {m_bound} must be a finite positive real"),
        });
    }
    let sup = kernel.sup_norm();
    if sup > m_bound * (1.0 + 1e-12) {
        return Err(Error::KernelBoundExceeded {
            sup,
            declared: m_bound,
        });
    }
    let f = ustat_build(kernel, n)?;
    let norms = norm_ladder(&f, d)?;
    let s = norms.iter().fold(0.0_f64, |m, (_, v)| m.max(*v));
    let nf = n as f64;
    let note = format!(
        "c = c0 / (n * s^(2/d)) with s = {s:e} computed from the statistic; \
         for fixed arity d = {d} and kernel bound M = {m_bound} the product n * s^(2/d) \
         stays bounded, so the rate degrades only through the reported s"
    );
    if s == 0.0 {
        return Ok(Certificate {
            statement: StatementKind::UStat,
            order: d,
            constant: EXP_MOMENT_CONSTANT,
            scale: 0.0,
            rate: 0.0,
            bound: 2.0,
            conditions: Vec::new(),
            exact_moment: Some(1.0),
            notes: vec![note, "the statistic vanishes identically".into()],
        });
    }
    let c_n = EXP_MOMENT_CONSTANT / (nf * pow_2_over_d(s, d));
    let rate = c_n * nf;
    let exact = exp_moment_value(&f, rate, d);
    if exact > 2.0 + MOMENT_BUG_TOL {
        return Err(Error::BoundViolated {
            name: "U-statistic exponential moment".into(),
            lhs: exact,
            rhs: 2.0,
        });
    }
    Ok(Certificate {
        statement: StatementKind::UStat,
        order: d,
        constant: c_n,
        scale: s,
        rate,
        bound: 2.0,
        conditions: normalized_conditions(&norms, s),
        exact_moment: Some(exact),
        notes: vec![note],
    })
}

// ---------------------------------------------------------------------------
// partial sums and small helpers
// ---------------------------------------------------------------------------

/// The additive functional `S(x) = sum_{i<=n} step(x_1 + ... + x_i)` of the
/// running partial sums.
pub fn partial_sum_function<F: Fn(f64) -> f64>(
    space: &SpaceRef,
    step: F,
) -> Result<FunctionTable> {
    FunctionTable::from_fn(space.clone(), |x| {
        let mut prefix = 0.0;
        let mut total = 0.0;
        for &xi in x {
            prefix += xi;
            total += step(prefix);
        }
        total
    })
}

/// Tail bound for partial-sum functionals with a 1-bounded-difference step
/// of size `m_bound`:
/// `e^2 exp(-c * min(t^2 / (n^3 M^2), t / (n^2 M)))`.
/// The calibration constant `c` is supplied by the caller.
pub fn partial_sum_tail(n: usize, m_bound: f64, t: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            reason: "partial-sum length n must be positive".into(),
        });
    }
    if !m_bound.is_finite() || m_bound <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("step bound M = {m_bound} must be a finite positive real"),
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("threshold t = {t} must be a finite nonnegative real"),
        });
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("calibration constant c = {c} must be a finite positive real"),
        });
    }
    let nf = n as f64;
    let quad = t * t / (nf.powi(3) * m_bound * m_bound);
    let lin = t / (nf * nf * m_bound);
    Ok(E * E * (-c * quad.min(lin)).exp())
}

/// Constant of the moment-growth criterion: `||f||_k <= gamma k` for all
/// `k >= 1` implies `E exp(c |f|) <= 2` with `c = 1/(2 gamma e)`.
pub fn subexp_constant(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: format!("moment growth rate gamma = {gamma} must be a finite positive real"),
        });
    }
    Ok(1.0 / (2.0 * gamma * E))
}

// ---------------------------------------------------------------------------
// multilinear implication
// ---------------------------------------------------------------------------

/// Outcome of the multilinear norm implication check.
#[derive(Clone, Debug, Serialize)]
pub struct ImplicationReport {
    pub order: usize,
    /// `||h^(d) f||_{HS,sup}`, the quantity the function is divided by.
    pub normalizer: f64,
    pub conditions: Vec<Condition>,
    pub holds: bool,
}

/// For a multilinear polynomial with no terms of degree strictly between 0
/// and `d`, over centered unit-second-moment coordinates, normalizing by
/// `||h^(d) f||_{HS,sup}` forces `||h^(k) f||_{HS,2} <= 1` for all `k < d`.
pub fn multilinear_implication_check(
    space: &SpaceRef,
    poly: &MultilinearPolynomial,
    d: usize,
) -> Result<ImplicationReport> {
    let n = space.n_coords();
    if poly.n_vars() != n {
        return Err(Error::DimensionMismatch {
            reason: format!(
                "polynomial has {} variables but the space has {n} coordinates",
                poly.n_vars()
            ),
        });
    }
    if d == 0 || d > n {
        return Err(Error::InvalidOrder {
            reason: format!("order d = {d} must satisfy 1 <= d <= {n}"),
        });
    }
    for i in 1..=n {
        let dist = space.coord(i);
        if dist.mean().abs() > 1e-12 || (dist.second_moment() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                reason: format!("coordinate {i} must be centered with unit second moment"),
            });
        }
    }
    if d >= 2 && !poly.degrees_absent(1, d - 1) {
        return Err(Error::InvalidParameter {
            reason: "polynomial has terms of degree strictly between 0 and the order d".into(),
        });
    }
    let f = eval_polynomial(space, poly)?;
    let normalizer = h_norm(&f, d, f64::INFINITY)?;
    let mut conditions = Vec::with_capacity(d.saturating_sub(1));
    for k in 1..d {
        let raw = h_norm(&f, k, 2.0)?;
        let condition = if normalizer > 0.0 {
            Condition::new(format!("hs2_norm_order_{k}"), raw / normalizer, 1.0)
        } else {
            // Degenerate normalizer: the implication content is that the
            // lower norms vanish too.
            Condition::new(format!("hs2_norm_order_{k}"), raw, 0.0)
        };
        conditions.push(condition);
    }
    let holds = conditions.iter().all(|c| c.pass);
    Ok(ImplicationReport {
        order: d,
        normalizer,
        conditions,
        holds,
    })
}
