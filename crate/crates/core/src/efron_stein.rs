//! Efron-Stein inequalities and exact variance identities.
//!
//! The classical inequality bounds Var f by the summed conditional
//! variances. Its higher-order form applies to functions whose Hoeffding
//! decomposition starts at degree d (f = E f + sum_{k >= d} f_k) and reads
//!
//!   Var f <= (1/d!) E |G^{(d)} f|_HS^2
//!
//! for the recentering/rms operator kinds, with an extra factor 2 for the
//! signed-part kinds; equality holds exactly when f = E f + f_d. Two exact
//! identities complement the bounds: the per-degree representation
//! Var f = sum_k (1/k!) E |G^{(k)} f_k|^2 and the alternating expansion
//! Var f = sum_k ((-1)^{k+1}/k!) E |G^{(k)} f|^2.

use serde::Serialize;

use crate::diff_ops::{difference_tensor, OperatorKind};
use crate::error::{Error, Result};
use crate::hoeffding;
use crate::space::FunctionTable;

/// Relative L^2 tolerance for the equality characterization.
pub const EQUALITY_TOL: f64 = 1e-9;

/// Outcome of one Efron-Stein comparison.
#[derive(Clone, Debug, Serialize)]
pub struct ESReport {
    /// Exact Var f.
    pub variance: f64,
    /// The theorem's right-hand side.
    pub bound: f64,
    /// bound - variance; nonnegative up to roundoff when the theorem applies.
    pub gap: f64,
    /// Operator kind the bound was computed with.
    pub kind: OperatorKind,
    /// Tensor order d.
    pub order: usize,
    /// True when f = E f + f_d within `EQUALITY_TOL` relative L^2 error,
    /// the exact equality case of the theorem.
    pub equality: bool,
}

fn poincare_factor(kind: OperatorKind) -> Result<f64> {
    match kind {
        OperatorKind::V | OperatorKind::DD | OperatorKind::DSmall => Ok(1.0),
        OperatorKind::DPlus | OperatorKind::DMinus => Ok(2.0),
        other => Err(Error::UnsupportedKind {
            kind: other.to_string(),
            reason: "no variance bound is claimed for the sup-type kinds".into(),
        }),
    }
}

/// E |G^{(d)} f|_HS^2 for the given kind and order.
fn tensor_mass(f: &FunctionTable, kind: OperatorKind, d: usize) -> Result<f64> {
    let field = difference_tensor(f, kind, d)?;
    let hs = field.hs_field();
    Ok(hs.hadamard(&hs)?.mean())
}

/// Distance-based equality flag: ||f - E f - f_d||_2 <= tol * ||f||_2.
fn equality_case(f: &FunctionTable, d: usize) -> Result<bool> {
    let dec = hoeffding::decompose(f)?;
    let fd = dec.degree_component(d)?;
    let mean = FunctionTable::constant(std::sync::Arc::clone(f.space()), dec.mean());
    let rest = f.sub(&mean)?.sub(&fd)?;
    let fl2 = f.lp_norm(2.0)?;
    Ok(rest.lp_norm(2.0)? <= EQUALITY_TOL * fl2.max(1e-300))
}

/// Classical (order-1) Efron-Stein comparison: Var f <= E |G f|^2, with a
/// factor 2 for the signed-part kinds. Every f qualifies.
pub fn efron_stein_check(f: &FunctionTable, kind: OperatorKind) -> Result<ESReport> {
    es_report(f, kind, 1, false)
}

/// Higher-order comparison for functions degenerate from degree d:
/// Var f <= (factor/d!) E |G^{(d)} f|_HS^2. Errors when f has Hoeffding
/// mass below degree d, naming the lowest offending degree.
pub fn higher_order_es(f: &FunctionTable, d: usize, kind: OperatorKind) -> Result<ESReport> {
    es_report(f, kind, d, true)
}

fn es_report(
    f: &FunctionTable,
    kind: OperatorKind,
    d: usize,
    check_degeneracy: bool,
) -> Result<ESReport> {
    let factor = poincare_factor(kind)?;
    let n = f.space().n_coords();
    if d == 0 || d > n {
        return Err(Error::InvalidOrder {
            reason: format!("order {d} out of range 1..={n}"),
        });
    }
    if check_degeneracy {
        let dec = hoeffding::decompose(f)?;
        if let Some((lowest, mass)) = dec.low_degree_violation(d) {
            return Err(Error::NotDegenerate {
                required: d,
                lowest,
                mass,
            });
        }
    }
    let variance = f.variance();
    let d_factorial: f64 = (1..=d as u64).map(|k| k as f64).product();
    let bound = factor / d_factorial * tensor_mass(f, kind, d)?;
    let gap = bound - variance;
    let equality = equality_case(f, d)?;
    Ok(ESReport {
        variance,
        bound,
        gap,
        kind,
        order: d,
        equality,
    })
}

/// Per-degree variance contributions c_k = (1/k!) E |G^{(k)} f_k|^2 for
/// k = 1..n, where f_k is the degree-k Hoeffding term. Their sum is
/// exactly Var f for the kinds V, DD, and D_SMALL.
pub fn variance_identity(f: &FunctionTable, kind: OperatorKind) -> Result<Vec<f64>> {
    match kind {
        OperatorKind::V | OperatorKind::DD | OperatorKind::DSmall => {}
        other => {
            return Err(Error::UnsupportedKind {
                kind: other.to_string(),
                reason: "the per-degree identity holds for kinds v, dd, d".into(),
            })
        }
    }
    let dec = hoeffding::decompose(f)?;
    let n = f.space().n_coords();
    let mut out = Vec::with_capacity(n);
    let mut k_factorial = 1.0;
    for k in 1..=n {
        k_factorial *= k as f64;
        let fk = dec.degree_component(k)?;
        // Skip the tensor when the component vanishes: its mass is zero.
        let contribution = if fk.sup_norm() == 0.0 {
            0.0
        } else {
            tensor_mass(&fk, kind, k)? / k_factorial
        };
        out.push(contribution);
    }
    Ok(out)
}

/// Signed terms t_k = ((-1)^{k+1}/k!) E |G^{(k)} f|^2 of the alternating
/// variance expansion, applied to f itself. Kinds V, DD, D_SMALL sum to
/// Var f directly; the signed-part kinds D_PLUS/D_MINUS carry an extra
/// per-term factor 2 (E |d^{(k)} f|^2 = 2 E |d^{+(k)} f|^2 exactly, by
/// symmetry of the resampled pair), which this routine applies.
pub fn alternating_identity(f: &FunctionTable, kind: OperatorKind) -> Result<Vec<f64>> {
    let factor = poincare_factor(kind)?;
    let n = f.space().n_coords();
    let mut out = Vec::with_capacity(n);
    let mut k_factorial = 1.0;
    for k in 1..=n {
        k_factorial *= k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out.push(sign * factor / k_factorial * tensor_mass(f, kind, k)?);
    }
    Ok(out)
}
