//! Difference operators and their order-d hypermatrix fields.
//!
//! For a function f of independent coordinates, T_i resamples coordinate i
//! from an independent copy. Eight coordinate-wise sensitivity measures are
//! supported:
//!
//! - `H`, `H_PLUS`, `H_MINUS`: half the sup (over both the coordinate and
//!   its resampled copy) of |f - T_i f|, or of its positive/negative part;
//! - `V`: the conditional standard deviation (Var_i f)^{1/2};
//! - `DD`: the signed recentering f - E_i f;
//! - `D_SMALL`, `D_PLUS`, `D_MINUS`: the root-mean-square of f - T_i f
//!   (or its signed parts) over the resampled copy, with a factor 1/2
//!   per order inside the square root.
//!
//! The order-d object applies the product over a tuple of distinct
//! coordinates, e.g. prod_s (Id - T_{i_s}) f with a 2^{-d} normalization,
//! and is stored as a hypermatrix field: one table per sorted index tuple,
//! zero on non-distinct tuples, symmetric under permutations (the
//! per-coordinate operators commute, so only sorted tuples are stored).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{FunctionTable, SpaceRef};

/// Default cap on the total enumeration work of one tensor build,
/// measured as sum over tuples of N * prod_s |support_{i_s}|.
pub const DEFAULT_TENSOR_BUDGET: u128 = 1 << 32;

/// Which difference operator a tensor entry carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum OperatorKind {
    /// Sup-based magnitude, constant along the tuple coordinates.
    H,
    /// Positive part before the sup.
    HPlus,
    /// Negative part before the sup.
    HMinus,
    /// Conditional-variance root, constant along the tuple coordinates.
    V,
    /// Signed iterated recentering f - E_i f (the only signed kind).
    DD,
    /// Root-mean-square over resampled copies.
    DSmall,
    /// Positive part before the mean square.
    DPlus,
    /// Negative part before the mean square.
    DMinus,
}

impl OperatorKind {
    /// All kinds in a fixed order.
    pub const ALL: [OperatorKind; 8] = [
        OperatorKind::H,
        OperatorKind::HPlus,
        OperatorKind::HMinus,
        OperatorKind::V,
        OperatorKind::DD,
        OperatorKind::DSmall,
        OperatorKind::DPlus,
        OperatorKind::DMinus,
    ];

    /// True for kinds whose entries are nonnegative magnitudes (every kind
    /// except the signed recentering `DD`).
    pub fn is_magnitude(self) -> bool {
        !matches!(self, OperatorKind::DD)
    }

    /// True for the kinds built from the resampling operator T_i.
    fn uses_resampling(self) -> bool {
        matches!(
            self,
            OperatorKind::H
                | OperatorKind::HPlus
                | OperatorKind::HMinus
                | OperatorKind::DSmall
                | OperatorKind::DPlus
                | OperatorKind::DMinus
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorKind::H => "h",
            OperatorKind::HPlus => "h+",
            OperatorKind::HMinus => "h-",
            OperatorKind::V => "v",
            OperatorKind::DD => "dd",
            OperatorKind::DSmall => "d",
            OperatorKind::DPlus => "d+",
            OperatorKind::DMinus => "d-",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "h" => OperatorKind::H,
            "h+" => OperatorKind::HPlus,
            "h-" => OperatorKind::HMinus,
            "v" => OperatorKind::V,
            "dd" => OperatorKind::DD,
            "d" => OperatorKind::DSmall,
            "d+" => OperatorKind::DPlus,
            "d-" => OperatorKind::DMinus,
            other => {
                return Err(Error::UnsupportedKind {
                    kind: other.into(),
                    reason: "expected one of h, h+, h-, v, dd, d, d+, d-".into(),
                })
            }
        })
    }
}

/// Order-d hypermatrix of difference-operator values: one FunctionTable per
/// strictly increasing coordinate tuple. The full (symmetric) hypermatrix
/// over all n^d index tuples is recovered by permuting indices and placing
/// zeros on tuples with repeated coordinates.
#[derive(Debug)]
pub struct HypermatrixField {
    kind: OperatorKind,
    order: usize,
    space: SpaceRef,
    entries: BTreeMap<Vec<usize>, FunctionTable>,
}

impl HypermatrixField {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    /// Entry table for a coordinate tuple (any order, 1-based). Tuples with
    /// repeated coordinates are zero by convention and return `None`, as do
    /// entries that vanish identically.
    pub fn entry(&self, tuple: &[usize]) -> Option<&FunctionTable> {
        let mut key = tuple.to_vec();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        self.entries.get(&key)
    }

    /// Iterates (sorted tuple, table) pairs in lexicographic tuple order.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], &FunctionTable)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v))
    }

    /// Pointwise Hilbert-Schmidt magnitude: the Euclidean norm of the full
    /// order-d hypermatrix at each outcome. Each stored sorted tuple stands
    /// for d! equal entries of the full hypermatrix, hence the d! factor.
    pub fn hs_field(&self) -> FunctionTable {
        let n_out = self.space.n_outcomes();
        let mut sumsq = vec![0.0f64; n_out];
        for table in self.entries.values() {
            for (acc, &v) in sumsq.iter_mut().zip(table.values()) {
                *acc += v * v;
            }
        }
        let fac: f64 = (1..=self.order as u64).map(|k| k as f64).product();
        let values = sumsq.into_iter().map(|s| (fac * s).sqrt()).collect();
        FunctionTable::from_values(Arc::clone(&self.space), values)
            .expect("length matches the space by construction")
    }

    /// L^p norm of the Hilbert-Schmidt magnitude, (E |F|_HS^p)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        self.hs_field().lp_norm(p)
    }
}

fn check_order(space: &SpaceRef, d: usize) -> Result<()> {
    if d == 0 || d > space.n_coords() {
        return Err(Error::InvalidOrder {
            reason: format!(
                "tensor order {d} out of range 1..={n}",
                n = space.n_coords()
            ),
        });
    }
    Ok(())
}

/// Strictly increasing d-tuples over 1..=n in lexicographic order.
fn sorted_tuples(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=d).collect();
    loop {
        out.push(cur.clone());
        // advance the rightmost index that can still move
        let mut s = d;
        loop {
            if s == 0 {
                return out;
            }
            s -= 1;
            if cur[s] < n - (d - 1 - s) {
                cur[s] += 1;
                for u in s + 1..d {
                    cur[u] = cur[u - 1] + 1;
                }
                break;
            }
        }
    }
}

fn tensor_cost(space: &SpaceRef, tuples: &[Vec<usize>]) -> u128 {
    let n_out = space.n_outcomes() as u128;
    tuples
        .iter()
        .map(|t| {
            let prod: u128 = t.iter().map(|&i| space.coord(i).len() as u128).product();
            n_out.saturating_mul(prod)
        })
        .fold(0u128, u128::saturating_add)
}

/// The iterated product of differences over resampled copies for one
/// tuple-class of outcomes. Returns the flat array of
/// prod_s (Id - T_{i_s}) f over assignments (a_1, b_1, ..., a_d, b_d),
/// little-endian with a_1 fastest, where a_s is the digit of the actual
/// coordinate i_s and b_s the digit of its resampled copy.
fn product_differences(
    values: &[f64],
    base: usize,
    strides: &[usize],
    radices: &[usize],
) -> Vec<f64> {
    let d = strides.len();
    let size0: usize = radices.iter().product();
    let mut cur = Vec::with_capacity(size0);
    let mut digits = vec![0usize; d];
    for _ in 0..size0 {
        let off: usize = digits.iter().zip(strides).map(|(c, st)| c * st).sum();
        cur.push(values[base + off]);
        for s in 0..d {
            digits[s] += 1;
            if digits[s] < radices[s] {
                break;
            }
            digits[s] = 0;
        }
    }
    // Replace each single digit c_s by the pair (a_s, b_s) and take the
    // difference; the layout invariant keeps processed pairs fastest.
    for s in 0..d {
        let r = radices[s];
        let lead: usize = radices[..s].iter().map(|r| r * r).product();
        let tail_len = cur.len() / (lead * r);
        let mut next = Vec::with_capacity(cur.len() * r);
        for t in 0..tail_len {
            for b in 0..r {
                for a in 0..r {
                    for l in 0..lead {
                        let va = cur[l + lead * (a + r * t)];
                        let vb = cur[l + lead * (b + r * t)];
                        next.push(va - vb);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Builds the order-d hypermatrix field of `kind` for `f` with the default
/// work budget.
pub fn difference_tensor(
    f: &FunctionTable,
    kind: OperatorKind,
    d: usize,
) -> Result<HypermatrixField> {
    difference_tensor_with_budget(f, kind, d, DEFAULT_TENSOR_BUDGET)
}

/// Builds the order-d hypermatrix field of `kind` for `f`, refusing when
/// the enumeration work exceeds `budget`.
pub fn difference_tensor_with_budget(
    f: &FunctionTable,
    kind: OperatorKind,
    d: usize,
    budget: u128,
) -> Result<HypermatrixField> {
    let space = Arc::clone(f.space());
    check_order(&space, d)?;
    let tuples = sorted_tuples(space.n_coords(), d);
    let cost = tensor_cost(&space, &tuples);
    if cost > budget {
        return Err(Error::TensorBudget {
            cost,
            budget,
            order: d,
            outcomes: space.n_outcomes(),
        });
    }

    let entries: Vec<(Vec<usize>, FunctionTable)> = tuples
        .into_par_iter()
        .map(|tuple| {
            let table = if kind.uses_resampling() {
                resampling_entry(f, kind, &tuple)
            } else {
                recentering_entry(f, kind, &tuple)
            }?;
            Ok((tuple, table))
        })
        .collect::<Result<_>>()?;

    Ok(HypermatrixField {
        kind,
        order: d,
        space,
        entries: entries.into_iter().collect(),
    })
}

/// Entry for the sup- and rms-type kinds built from resampling operators,
/// over one strictly increasing tuple.
fn resampling_entry(
    f: &FunctionTable,
    kind: OperatorKind,
    tuple: &[usize],
) -> Result<FunctionTable> {
    let space = f.space();
    let d = tuple.len();
    let strides: Vec<usize> = tuple.iter().map(|&i| space.stride(i)).collect();
    let radices: Vec<usize> = tuple.iter().map(|&i| space.coord(i).len()).collect();
    let combo: usize = radices.iter().product();
    let scale = 0.5f64.powi(d as i32);

    // Offsets of each actual-digit assignment a (resp. resampled-copy
    // assignment b) inside the product_differences layout and inside the
    // outcome index.
    let mut a_offsets = Vec::with_capacity(combo);
    let mut b_offsets = Vec::with_capacity(combo);
    let mut out_offsets = Vec::with_capacity(combo);
    let mut bar_weights = Vec::with_capacity(combo);
    {
        let mut digits = vec![0usize; d];
        let mut a_stride = Vec::with_capacity(d);
        let mut b_stride = Vec::with_capacity(d);
        let mut acc = 1usize;
        for &r in &radices {
            a_stride.push(acc);
            b_stride.push(acc * r);
            acc *= r * r;
        }
        for _ in 0..combo {
            let mut a_off = 0;
            let mut b_off = 0;
            let mut out_off = 0;
            let mut w = 1.0;
            for s in 0..d {
                a_off += digits[s] * a_stride[s];
                b_off += digits[s] * b_stride[s];
                out_off += digits[s] * strides[s];
                w *= space.coord(tuple[s]).probs()[digits[s]];
            }
            a_offsets.push(a_off);
            b_offsets.push(b_off);
            out_offsets.push(out_off);
            bar_weights.push(w);
            for s in 0..d {
                digits[s] += 1;
                if digits[s] < radices[s] {
                    break;
                }
                digits[s] = 0;
            }
        }
    }

    let n_out = space.n_outcomes();
    let mut out = vec![0.0f64; n_out];
    'outer: for base in 0..n_out {
        for &i in tuple {
            if space.digit(base, i) != 0 {
                continue 'outer;
            }
        }
        let g = product_differences(f.values(), base, &strides, &radices);
        match kind {
            OperatorKind::H | OperatorKind::HPlus | OperatorKind::HMinus => {
                let mut m = 0.0f64;
                for &v in &g {
                    let vv = match kind {
                        OperatorKind::H => v.abs(),
                        OperatorKind::HPlus => v.max(0.0),
                        _ => (-v).max(0.0),
                    };
                    m = m.max(vv);
                }
                let val = scale * m;
                // Constant along the tuple coordinates: fill the class.
                for &a_out in &out_offsets {
                    out[base + a_out] = val;
                }
            }
            _ => {
                // Root-mean-square over the resampled copies, one value per
                // actual-digit assignment.
                for (&a_off, &a_out) in a_offsets.iter().zip(&out_offsets) {
                    let mut acc = 0.0f64;
                    for (&b_off, &w) in b_offsets.iter().zip(&bar_weights) {
                        let v = g[a_off + b_off];
                        let v = match kind {
                            OperatorKind::DSmall => v,
                            OperatorKind::DPlus => v.max(0.0),
                            _ => (-v).max(0.0),
                        };
                        acc += w * v * v;
                    }
                    out[base + a_out] = (scale * acc).sqrt();
                }
            }
        }
    }
    FunctionTable::from_values(Arc::clone(space), out)
}

/// Entry for the recentering kinds `DD` (signed) and `V` (rms over the
/// tuple coordinates) over one strictly increasing tuple.
fn recentering_entry(
    f: &FunctionTable,
    kind: OperatorKind,
    tuple: &[usize],
) -> Result<FunctionTable> {
    let mut g = f.clone();
    for &i in tuple {
        let ei = g.cond_expectation(&[i])?;
        g = g.sub(&ei)?;
    }
    match kind {
        OperatorKind::DD => Ok(g),
        OperatorKind::V => {
            let sq = g.hadamard(&g)?;
            Ok(sq.cond_expectation(tuple)?.map(f64::sqrt))
        }
        other => Err(Error::UnsupportedKind {
            kind: other.to_string(),
            reason: "internal: recentering path handles only dd and v".into(),
        }),
    }
}

/// Difference-operator entry for an arbitrary coordinate tuple, repeats
/// allowed. Resampling operators are idempotent (T_{ii} = T_i) and so is
/// the recentering E_i, so a repeated coordinate collapses to a single
/// resampled copy while the 2^{-d} normalization keeps the multiplicity;
/// e.g. the (i,i) entry of the order-2 sup tensor is half the order-1
/// entry. This direct evaluation exists chiefly so that tests can check
/// the collapse identities and permutation symmetry; `difference_tensor`
/// is the fast path for the distinct tuples that make up the hypermatrix.
pub fn operator_entry(
    f: &FunctionTable,
    kind: OperatorKind,
    tuple: &[usize],
) -> Result<FunctionTable> {
    let space = f.space();
    if tuple.is_empty() {
        return Err(Error::InvalidOrder {
            reason: "operator tuple must not be empty".into(),
        });
    }
    for &i in tuple {
        space.check_coord(i)?;
    }
    let d = tuple.len();

    if !kind.uses_resampling() {
        // E_i is idempotent, so iterating positions handles repeats.
        let mut g = f.clone();
        for &i in tuple {
            let ei = g.cond_expectation(&[i])?;
            g = g.sub(&ei)?;
        }
        return match kind {
            OperatorKind::DD => Ok(g),
            OperatorKind::V => {
                let sq = g.hadamard(&g)?;
                let mut distinct = tuple.to_vec();
                distinct.sort_unstable();
                distinct.dedup();
                Ok(sq.cond_expectation(&distinct)?.map(f64::sqrt))
            }
            _ => unreachable!("resampling kinds handled below"),
        };
    }

    let mut distinct = tuple.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let m = distinct.len();
    let strides: Vec<usize> = distinct.iter().map(|&i| space.stride(i)).collect();
    let radices: Vec<usize> = distinct.iter().map(|&i| space.coord(i).len()).collect();
    let combo: usize = radices.iter().product();
    let scale = 0.5f64.powi(d as i32);
    // position -> slot in the distinct list
    let slot: Vec<usize> = tuple
        .iter()
        .map(|i| distinct.iter().position(|j| j == i).unwrap())
        .collect();

    let enumerate_digits = |combo: usize, radices: &[usize]| {
        let mut all = Vec::with_capacity(combo);
        let mut digits = vec![0usize; radices.len()];
        for _ in 0..combo {
            all.push(digits.clone());
            for s in 0..radices.len() {
                digits[s] += 1;
                if digits[s] < radices[s] {
                    break;
                }
                digits[s] = 0;
            }
        }
        all
    };
    let assignments = enumerate_digits(combo, &radices);

    let n_out = space.n_outcomes();
    let mut out = vec![0.0f64; n_out];
    'outer: for base in 0..n_out {
        for &i in &distinct {
            if space.digit(base, i) != 0 {
                continue 'outer;
            }
        }
        // g(a, b) = sum over position subsets A of (-1)^{|A|} f with the
        // coordinates resampled on the *set* of coordinates covered by A.
        let mut g = vec![0.0f64; combo * combo];
        for (bi, b) in assignments.iter().enumerate() {
            for (ai, a) in assignments.iter().enumerate() {
                let mut acc = 0.0f64;
                for sub in 0u32..(1 << d) {
                    let mut covered = vec![false; m];
                    for (pos, &sl) in slot.iter().enumerate() {
                        if sub & (1 << pos) != 0 {
                            covered[sl] = true;
                        }
                    }
                    let mut off = 0usize;
                    for s in 0..m {
                        let digit = if covered[s] { b[s] } else { a[s] };
                        off += digit * strides[s];
                    }
                    let sign = if sub.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * f.values()[base + off];
                }
                g[ai + combo * bi] = acc;
            }
        }
        match kind {
            OperatorKind::H | OperatorKind::HPlus | OperatorKind::HMinus => {
                let mut mx = 0.0f64;
                for &v in &g {
                    let vv = match kind {
                        OperatorKind::H => v.abs(),
                        OperatorKind::HPlus => v.max(0.0),
                        _ => (-v).max(0.0),
                    };
                    mx = mx.max(vv);
                }
                let val = scale * mx;
                for a in &assignments {
                    let off: usize = a.iter().zip(&strides).map(|(c, st)| c * st).sum();
                    out[base + off] = val;
                }
            }
            _ => {
                for (ai, a) in assignments.iter().enumerate() {
                    let mut acc = 0.0f64;
                    for (bi, b) in assignments.iter().enumerate() {
                        let mut w = 1.0;
                        for (s, &digit) in b.iter().enumerate() {
                            w *= space.coord(distinct[s]).probs()[digit];
                        }
                        let v = g[ai + combo * bi];
                        let v = match kind {
                            OperatorKind::DSmall => v,
                            OperatorKind::DPlus => v.max(0.0),
                            _ => (-v).max(0.0),
                        };
                        acc += w * v * v;
                    }
                    let off: usize = a.iter().zip(&strides).map(|(c, st)| c * st).sum();
                    out[base + off] = (scale * acc).sqrt();
                }
            }
        }
    }
    FunctionTable::from_values(Arc::clone(space), out)
}

/// Entrywise pointwise maximum of the sup-type (kind `H`) tensors over a
/// finite class of functions on one common space.
pub fn sup_class_tensor(fs: &[FunctionTable], d: usize) -> Result<HypermatrixField> {
    let first = fs.first().ok_or(Error::EmptyInput {
        reason: "sup-class tensor needs at least one function".into(),
    })?;
    for f in &fs[1..] {
        if f.space().as_ref() != first.space().as_ref() {
            return Err(Error::MixedSpaces);
        }
    }
    let mut acc = difference_tensor(first, OperatorKind::H, d)?;
    for f in &fs[1..] {
        let next = difference_tensor(f, OperatorKind::H, d)?;
        for (tuple, table) in &mut acc.entries {
            let other = &next.entries[tuple];
            let values: Vec<f64> = table
                .values()
                .iter()
                .zip(other.values())
                .map(|(&a, &b)| a.max(b))
                .collect();
            *table = FunctionTable::from_values(Arc::clone(&acc.space), values)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, rademacher_space, FiniteDistribution};
    use approx::assert_relative_eq;

    fn table(n: usize, f: impl FnMut(&[f64]) -> f64) -> FunctionTable {
        FunctionTable::from_fn(rademacher_space(n).unwrap(), f).unwrap()
    }

    #[test]
    fn sup_tensor_order_one_of_coordinate() {
        let f = table(2, |x| x[0]);
        let t = difference_tensor(&f, OperatorKind::H, 1).unwrap();
        assert_eq!(t.entry(&[1]).unwrap().values(), &[1.0; 4]);
        assert_eq!(t.entry(&[2]).unwrap().values(), &[0.0; 4]);
    }

    #[test]
    fn sup_tensor_order_two_of_parity() {
        let f = table(2, |x| x[0] * x[1]);
        let t = difference_tensor(&f, OperatorKind::H, 2).unwrap();
        assert_eq!(t.entry(&[1, 2]).unwrap().values(), &[1.0; 4]);
        // symmetric lookup and zero diagonal by convention
        assert_eq!(
            t.entry(&[2, 1]).unwrap().values(),
            t.entry(&[1, 2]).unwrap().values()
        );
        assert!(t.entry(&[1, 1]).is_none());
    }

    #[test]
    fn conditional_sd_of_parity_is_one() {
        let f = table(2, |x| x[0] * x[1]);
        let t = difference_tensor(&f, OperatorKind::V, 1).unwrap();
        assert_eq!(t.entry(&[1]).unwrap().values(), &[1.0; 4]);
        assert_eq!(t.entry(&[2]).unwrap().values(), &[1.0; 4]);
    }

    #[test]
    fn signed_positive_rms_sees_only_the_up_side() {
        let f = FunctionTable::from_fn(rademacher_space(1).unwrap(), |x| x[0]).unwrap();
        let t = difference_tensor(&f, OperatorKind::DPlus, 1).unwrap();
        // at x = -1 (index 0): f - T f is never positive; at x = +1: rms 1
        assert_eq!(t.entry(&[1]).unwrap().values(), &[0.0, 1.0]);
        let tm = difference_tensor(&f, OperatorKind::DMinus, 1).unwrap();
        assert_eq!(tm.entry(&[1]).unwrap().values(), &[1.0, 0.0]);
    }

    #[test]
    fn hs_field_examples() {
        let f = table(2, |x| x[0] * x[1]);
        let t2 = difference_tensor(&f, OperatorKind::H, 2).unwrap();
        let hs = t2.hs_field();
        for &v in hs.values() {
            assert_relative_eq!(v, 2.0f64.sqrt(), max_relative = 1e-15);
        }

        let g = table(2, |x| x[0]);
        let t1 = difference_tensor(&g, OperatorKind::H, 1).unwrap();
        assert_eq!(t1.hs_field().values(), &[1.0; 4]);

        let z = table(2, |_| 0.0);
        let tz = difference_tensor(&z, OperatorKind::H, 2).unwrap();
        assert_eq!(tz.hs_field().values(), &[0.0; 4]);
    }

    #[test]
    fn field_lp_norm_examples() {
        let f = table(2, |x| x[0] * x[1]);
        let t2 = difference_tensor(&f, OperatorKind::H, 2).unwrap();
        assert_relative_eq!(
            t2.lp_norm(f64::INFINITY).unwrap(),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );

        let g = table(2, |x| x[0]);
        let t1 = difference_tensor(&g, OperatorKind::H, 1).unwrap();
        assert_relative_eq!(t1.lp_norm(2.0).unwrap(), 1.0, max_relative = 1e-15);

        let tf = difference_tensor(&f, OperatorKind::H, 1).unwrap();
        assert_relative_eq!(
            tf.lp_norm(2.0).unwrap(),
            2.0f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn sup_class_examples() {
        let x1 = table(1, |x| x[0]);
        let neg = x1.scale(-1.0);
        let t = sup_class_tensor(&[x1.clone(), neg], 1).unwrap();
        assert_eq!(t.entry(&[1]).unwrap().values(), &[1.0, 1.0]);

        let f = table(2, |x| x[0] * x[1]);
        let single = sup_class_tensor(std::slice::from_ref(&f), 2).unwrap();
        let direct = difference_tensor(&f, OperatorKind::H, 2).unwrap();
        assert_eq!(
            single.entry(&[1, 2]).unwrap().values(),
            direct.entry(&[1, 2]).unwrap().values()
        );

        let g = table(2, |x| x[0]);
        let class = sup_class_tensor(&[f, g], 2).unwrap();
        assert_eq!(class.entry(&[1, 2]).unwrap().values(), &[1.0; 4]);
    }

    #[test]
    fn repeated_index_collapses_with_half_weight() {
        // The (i, i) entry of the order-2 sup tensor is half the order-1
        // entry because the resampling operator is idempotent.
        let f = table(2, |x| {
            1.5 * x[0] - 2.0 * x[1] + 0.5 * x[0] * x[1] + 0.25
        });
        for kind in [OperatorKind::H, OperatorKind::HPlus, OperatorKind::HMinus] {
            let once = operator_entry(&f, kind, &[1]).unwrap();
            let twice = operator_entry(&f, kind, &[1, 1]).unwrap();
            for (a, b) in twice.values().iter().zip(once.values()) {
                assert_relative_eq!(*a, 0.5 * b, epsilon = 1e-15);
            }
        }
        // The recentering E_i is idempotent without extra normalization.
        let once = operator_entry(&f, OperatorKind::DD, &[2]).unwrap();
        let twice = operator_entry(&f, OperatorKind::DD, &[2, 2]).unwrap();
        assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn operator_entry_matches_tensor_on_distinct_tuples() {
        let f = table(3, |x| x[0] * x[1] + 0.5 * x[1] * x[2] - x[2] + 2.0);
        for kind in OperatorKind::ALL {
            let t = difference_tensor(&f, kind, 2).unwrap();
            for tuple in [[1usize, 2], [1, 3], [2, 3]] {
                let direct = operator_entry(&f, kind, &tuple).unwrap();
                assert_eq!(
                    direct.values(),
                    t.entry(&tuple).unwrap().values(),
                    "kind {kind} tuple {tuple:?}"
                );
            }
        }
    }

    #[test]
    fn entries_are_invariant_under_tuple_permutation() {
        let f = table(3, |x| x[0] * x[1] * x[2] + x[0] - 0.5 * x[1]);
        for kind in OperatorKind::ALL {
            let fwd = operator_entry(&f, kind, &[1, 3]).unwrap();
            let rev = operator_entry(&f, kind, &[3, 1]).unwrap();
            assert_eq!(fwd.values(), rev.values(), "kind {kind}");
        }
    }

    #[test]
    fn non_rademacher_supports_work() {
        // Three-point coordinate: check V against a direct variance.
        let dist = FiniteDistribution::new(vec![0.0, 1.0, 3.0], vec![0.25, 0.5, 0.25]).unwrap();
        let s = build_space(vec![dist]).unwrap();
        let f = FunctionTable::from_fn(Arc::clone(&s), |x| x[0] * x[0]).unwrap();
        let t = difference_tensor(&f, OperatorKind::V, 1).unwrap();
        // E f = 0.25*0 + 0.5*1 + 0.25*9 = 2.75; Var = E f^2 - (E f)^2
        let ef = 2.75;
        let ef2 = 0.5 + 0.25 * 81.0;
        let sd = f64::sqrt(ef2 - ef * ef);
        for &v in t.entry(&[1]).unwrap().values() {
            assert_relative_eq!(v, sd, max_relative = 1e-12);
        }
    }

    #[test]
    fn order_validation() {
        let f = table(2, |x| x[0]);
        assert!(difference_tensor(&f, OperatorKind::H, 0).is_err());
        assert!(difference_tensor(&f, OperatorKind::H, 3).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let f = table(3, |x| x[0]);
        let err = difference_tensor_with_budget(&f, OperatorKind::H, 2, 10).unwrap_err();
        assert!(matches!(err, Error::TensorBudget { .. }));
    }

    #[test]
    fn kind_parsing_round_trips() {
        for kind in OperatorKind::ALL {
            let s = kind.to_string();
            assert_eq!(s.parse::<OperatorKind>().unwrap(), kind);
        }
        assert!("q".parse::<OperatorKind>().is_err());
    }
}
