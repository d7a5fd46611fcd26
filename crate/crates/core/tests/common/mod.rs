//! Brute-force oracles and deterministic instance generators shared by the
//! integration tests.  (Each test binary uses its own subset, hence the
//! blanket dead-code allowance.)
#![allow(dead_code)]
//!
//! Everything here is transcribed as literally as possible from the
//! defining formulas — nested loops over outcome digits, explicit
//! inclusion-exclusion — and deliberately shares no logic with the library
//! internals beyond plain accessors (`coord`, `values`).

use std::sync::Arc;

use conc_core::diff_ops::OperatorKind;
use conc_core::space::{build_space, FiniteDistribution, FunctionTable, ProductSpace, SpaceRef};

// ---------------------------------------------------------------------------
// deterministic generator (xorshift64*)
// ---------------------------------------------------------------------------

pub struct Rng64(u64);

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Self(seed | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_u64() % (hi - lo + 1)
    }

    /// A multiple of 1/8 in [-2, 2]; dyadic values keep summation exact
    /// in easy cases and reproducible in all of them.
    pub fn dyadic(&mut self) -> f64 {
        (self.range(0, 32) as f64 - 16.0) / 8.0
    }
}

/// Random product space with up to `max_coords` coordinates and support
/// sizes in 2..=`max_support`; probabilities are normalized small integers.
pub fn random_space(rng: &mut Rng64, max_coords: usize, max_support: usize) -> SpaceRef {
    let n = rng.range(1, max_coords as u64) as usize;
    let coords = (0..n)
        .map(|_| {
            let r = rng.range(2, max_support as u64) as usize;
            // Distinct dyadic support points.
            let mut support = Vec::with_capacity(r);
            while support.len() < r {
                let v = rng.dyadic();
                if !support.contains(&v) {
                    support.push(v);
                }
            }
            let weights: Vec<f64> = (0..r).map(|_| rng.range(1, 4) as f64).collect();
            let total: f64 = weights.iter().sum();
            let probs = weights.iter().map(|w| w / total).collect();
            FiniteDistribution::new(support, probs).expect("valid coordinate")
        })
        .collect();
    build_space(coords).expect("valid space")
}

pub fn random_table(rng: &mut Rng64, space: &SpaceRef) -> FunctionTable {
    let values = (0..space.n_outcomes()).map(|_| rng.dyadic()).collect();
    FunctionTable::from_values(Arc::clone(space), values).expect("valid table")
}

// ---------------------------------------------------------------------------
// digit coding, written from the enumeration convention (coordinate 1
// varies fastest), independent of the library's stride bookkeeping
// ---------------------------------------------------------------------------

pub fn decode(space: &ProductSpace, mut idx: usize) -> Vec<usize> {
    (1..=space.n_coords())
        .map(|i| {
            let r = space.coord(i).len();
            let digit = idx % r;
            idx /= r;
            digit
        })
        .collect()
}

pub fn encode(space: &ProductSpace, digits: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (pos, &digit) in digits.iter().enumerate() {
        idx += digit * stride;
        stride *= space.coord(pos + 1).len();
    }
    idx
}

/// Iterates over all digit assignments of the (1-based) coordinates in
/// `set`, calling `visit(digits_of_set, probability_of_assignment)`.
fn for_each_assignment(
    space: &ProductSpace,
    set: &[usize],
    mut visit: impl FnMut(&[usize], f64),
) {
    let sizes: Vec<usize> = set.iter().map(|&i| space.coord(i).len()).collect();
    let mut assign = vec![0usize; set.len()];
    loop {
        let mut p = 1.0;
        for (s, &i) in set.iter().enumerate() {
            p *= space.coord(i).probs()[assign[s]];
        }
        visit(&assign, p);
        let mut pos = 0;
        loop {
            if pos == set.len() {
                return;
            }
            assign[pos] += 1;
            if assign[pos] < sizes[pos] {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// literal conditional expectation and Hoeffding components
// ---------------------------------------------------------------------------

/// E_S f: integrates out the (1-based) coordinates in `set` by direct
/// summation at every outcome.
pub fn oracle_cond_exp(f: &FunctionTable, set: &[usize]) -> Vec<f64> {
    let space = f.space();
    (0..space.n_outcomes())
        .map(|idx| {
            let base = decode(space, idx);
            let mut total = 0.0;
            for_each_assignment(space, set, |assign, p| {
                let mut digits = base.clone();
                for (s, &i) in set.iter().enumerate() {
                    digits[i - 1] = assign[s];
                }
                total += p * f.values()[encode(space, &digits)];
            });
            total
        })
        .collect()
}

pub fn oracle_mean(f: &FunctionTable) -> f64 {
    let space = f.space();
    let all: Vec<usize> = (1..=space.n_coords()).collect();
    oracle_cond_exp(f, &all)[0]
}

/// The component on the coordinate set `s` by inclusion-exclusion:
/// `h_S = sum over T subset of S of (-1)^(|S|-|T|) E[f | X_T]`,
/// where conditioning on T integrates out everything outside T.
pub fn oracle_hoeffding_component(f: &FunctionTable, s: &[usize]) -> Vec<f64> {
    let space = f.space();
    let n = space.n_coords();
    let mut out = vec![0.0; space.n_outcomes()];
    let k = s.len();
    for mask in 0u32..(1 << k) {
        let t: Vec<usize> = (0..k).filter(|&b| mask >> b & 1 == 1).map(|b| s[b]).collect();
        let integrate_out: Vec<usize> = (1..=n).filter(|i| !t.contains(i)).collect();
        let sign = if (k - t.len()) % 2 == 0 { 1.0 } else { -1.0 };
        for (slot, v) in out.iter_mut().zip(oracle_cond_exp(f, &integrate_out)) {
            *slot += sign * v;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// literal difference-operator entries
// ---------------------------------------------------------------------------

/// Value of f at `base` with the tuple coordinates replaced: coordinate
/// `tuple[s]` takes `resampled[s]` where `mask` has bit s set, `live[s]`
/// otherwise.
fn resampled_value(
    f: &FunctionTable,
    base: &[usize],
    tuple: &[usize],
    live: &[usize],
    resampled: &[usize],
    mask: u32,
) -> f64 {
    let mut digits = base.to_vec();
    for (s, &i) in tuple.iter().enumerate() {
        digits[i - 1] = if mask >> s & 1 == 1 {
            resampled[s]
        } else {
            live[s]
        };
    }
    f.values()[encode(f.space(), &digits)]
}

/// The alternating sum `prod_s (Id - T_{i_s}) f` at the given live and
/// resampled digits.
fn alternating_sum(
    f: &FunctionTable,
    base: &[usize],
    tuple: &[usize],
    live: &[usize],
    resampled: &[usize],
) -> f64 {
    let d = tuple.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << d) {
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * resampled_value(f, base, tuple, live, resampled, mask);
    }
    total
}

/// One hypermatrix entry, from the defining formula of each operator kind,
/// at the outcome `idx` and the distinct (1-based) coordinate `tuple`.
pub fn oracle_entry(f: &FunctionTable, kind: OperatorKind, tuple: &[usize], idx: usize) -> f64 {
    let space = f.space();
    let base = decode(space, idx);
    let d = tuple.len();
    let half_pow = (2.0_f64).powi(d as i32);
    match kind {
        // sup over both the live and the resampled digits of the
        // alternating sum (its absolute value or one signed part),
        // divided by 2^d.
        OperatorKind::H | OperatorKind::HPlus | OperatorKind::HMinus => {
            let mut best = 0.0_f64;
            for_each_assignment(space, tuple, |live, _| {
                let live = live.to_vec();
                for_each_assignment(space, tuple, |resampled, _| {
                    let a = alternating_sum(f, &base, tuple, &live, resampled);
                    let v = match kind {
                        OperatorKind::H => a.abs(),
                        OperatorKind::HPlus => a.max(0.0),
                        _ => (-a).max(0.0),
                    };
                    if v > best {
                        best = v;
                    }
                });
            });
            best / half_pow
        }
        // (E_tuple (prod of (Id - E_i) f)^2)^(1/2): recentering along each
        // tuple coordinate, then the quadratic mean over the tuple.
        OperatorKind::V => {
            let mut g = f.values().to_vec();
            for &i in tuple {
                let centered = {
                    let table =
                        FunctionTable::from_values(Arc::clone(space), g.clone()).expect("table");
                    let e = oracle_cond_exp(&table, &[i]);
                    g.iter().zip(e).map(|(v, m)| v - m).collect::<Vec<f64>>()
                };
                g = centered;
            }
            let mut total = 0.0;
            for_each_assignment(space, tuple, |assign, p| {
                let mut digits = base.clone();
                for (s, &i) in tuple.iter().enumerate() {
                    digits[i - 1] = assign[s];
                }
                let v = g[encode(space, &digits)];
                total += p * v * v;
            });
            total.sqrt()
        }
        // Iterated recentering, evaluated at the outcome itself (signed).
        OperatorKind::DD => {
            let mut g = f.values().to_vec();
            for &i in tuple {
                let table =
                    FunctionTable::from_values(Arc::clone(space), g.clone()).expect("table");
                let e = oracle_cond_exp(&table, &[i]);
                g = g.iter().zip(e).map(|(v, m)| v - m).collect();
            }
            g[idx]
        }
        // (2^-d E-bar (alternating sum)^2)^(1/2) with the live digits held
        // at the outcome; the signed-part variants clip before squaring.
        OperatorKind::DSmall | OperatorKind::DPlus | OperatorKind::DMinus => {
            let live: Vec<usize> = tuple.iter().map(|&i| base[i - 1]).collect();
            let mut total = 0.0;
            for_each_assignment(space, tuple, |resampled, p| {
                let a = alternating_sum(f, &base, tuple, &live, resampled);
                let v = match kind {
                    OperatorKind::DSmall => a,
                    OperatorKind::DPlus => a.max(0.0),
                    _ => (-a).max(0.0),
                };
                total += p * v * v;
            });
            (total / half_pow).sqrt()
        }
    }
}

/// All strictly increasing d-tuples over 1..=n.
pub fn increasing_tuples(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n, d, &mut Vec::new(), &mut out);
    out
}
