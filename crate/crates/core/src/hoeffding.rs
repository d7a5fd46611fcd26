//! Hoeffding decomposition of tabulated functions.
//!
//! Every f factors uniquely as f = sum over subsets S of {1..n} of h_S,
//! where h_S depends only on the coordinates in S and is mean-zero in each
//! of them (degenerate). The components are produced by sweeping the
//! coordinates once and splitting every partial term g into E_i g and
//! g - E_i g, which realizes the product of projections
//! h_S = prod_{i not in S} E_i prod_{i in S} (Id - E_i) f exactly.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::{FunctionTable, MultilinearPolynomial, SpaceRef};

/// Largest coordinate count for a full decomposition (2^n subsets).
pub const MAX_DECOMPOSITION_COORDS: usize = 20;

/// Components whose L^2 norm falls below this fraction of the sup-norm of
/// f are dropped from sparse storage.
const SPARSITY_TOL: f64 = 1e-12;

/// Absolute degeneracy tolerance on tables normalized to sup-norm 1.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Sparse map from coordinate subsets (bitmask over 1-based coordinates;
/// bit i-1 set means coordinate i belongs to S) to degenerate components.
#[derive(Debug)]
pub struct HoeffdingDecomposition {
    space: SpaceRef,
    n: usize,
    mean: f64,
    scale: f64,
    components: BTreeMap<u64, FunctionTable>,
}

fn mask_to_coords(mask: u64) -> Vec<usize> {
    (0..64)
        .filter(|b| mask & (1 << b) != 0)
        .map(|b| b + 1)
        .collect()
}

fn coords_to_mask(coords: &[usize], n: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &i in coords {
        if i == 0 || i > n {
            return Err(Error::InvalidOrder {
                reason: format!("coordinate {i} out of range 1..={n}"),
            });
        }
        mask |= 1 << (i - 1);
    }
    Ok(mask)
}

/// Computes the full Hoeffding decomposition of `f`.
pub fn decompose(f: &FunctionTable) -> Result<HoeffdingDecomposition> {
    let space = Arc::clone(f.space());
    let n = space.n_coords();
    if n > MAX_DECOMPOSITION_COORDS {
        return Err(Error::SubsetBudget {
            n,
            max_n: MAX_DECOMPOSITION_COORDS,
        });
    }
    let scale = f.sup_norm();

    let mut parts: Vec<(u64, FunctionTable)> = vec![(0, f.clone())];
    for i in 1..=n {
        parts = parts
            .into_par_iter()
            .map(|(mask, g)| {
                let ei = g.cond_expectation(&[i])?;
                let di = g.sub(&ei)?;
                Ok([(mask, ei), (mask | (1 << (i - 1)), di)])
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
    }

    let mut mean = 0.0;
    let mut components = BTreeMap::new();
    for (mask, h) in parts {
        if mask == 0 {
            mean = h.value(0);
        }
        let l2 = h.lp_norm(2.0).expect("p = 2 is valid");
        let keep = l2 > SPARSITY_TOL * scale || h.sup_norm() > SPARSITY_TOL * scale;
        if keep && scale > 0.0 {
            components.insert(mask, h);
        }
    }

    Ok(HoeffdingDecomposition {
        space,
        n,
        mean,
        scale,
        components,
    })
}

impl HoeffdingDecomposition {
    pub fn space(&self) -> &SpaceRef {
        &self.space
    }

    pub fn n_coords(&self) -> usize {
        self.n
    }

    /// E f, the value of the empty-set component.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sup-norm of the decomposed function; tolerances scale with it.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Component h_S for the subset given by 1-based coordinates, if it was
    /// kept in sparse storage (dropped components are zero).
    pub fn component(&self, coords: &[usize]) -> Option<&FunctionTable> {
        let mask = coords_to_mask(coords, self.n).ok()?;
        self.components.get(&mask)
    }

    /// Iterates stored (subset, component) pairs in mask order; subsets are
    /// sorted 1-based coordinate lists.
    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, &FunctionTable)> {
        self.components
            .iter()
            .map(|(&mask, h)| (mask_to_coords(mask), h))
    }

    /// Number of stored components.
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Degree-k term f_k, the sum of all h_S with |S| = k. Degree 0 returns
    /// the constant E f.
    pub fn degree_component(&self, k: usize) -> Result<FunctionTable> {
        if k > self.n {
            return Err(Error::InvalidOrder {
                reason: format!("degree {k} exceeds coordinate count {}", self.n),
            });
        }
        if k == 0 {
            return Ok(FunctionTable::constant(Arc::clone(&self.space), self.mean));
        }
        let mut out = FunctionTable::zero(Arc::clone(&self.space));
        for (&mask, h) in &self.components {
            if mask.count_ones() as usize == k {
                out = out.add(h)?;
            }
        }
        Ok(out)
    }

    /// L^2 masses ||f_k||_2^2 per degree k = 0..n, summed over the stored
    /// components (they are pairwise orthogonal).
    pub fn degree_profile(&self) -> Vec<f64> {
        let mut profile = vec![0.0; self.n + 1];
        profile[0] = self.mean * self.mean;
        for (&mask, h) in &self.components {
            if mask != 0 {
                let l2 = h.lp_norm(2.0).expect("p = 2 is valid");
                profile[mask.count_ones() as usize] += l2 * l2;
            }
        }
        profile
    }

    /// Sums every component back into one table.
    pub fn reconstruct(&self) -> Result<FunctionTable> {
        let mut out = if self.components.contains_key(&0) {
            FunctionTable::zero(Arc::clone(&self.space))
        } else {
            FunctionTable::constant(Arc::clone(&self.space), self.mean)
        };
        for h in self.components.values() {
            out = out.add(h)?;
        }
        Ok(out)
    }

    /// Smallest degree k in `1..d` carrying mass above the degeneracy
    /// tolerance, with that component's L^2 norm; `None` when f is
    /// degenerate from degree d.
    pub fn low_degree_violation(&self, d: usize) -> Option<(usize, f64)> {
        for k in 1..d {
            let fk = self
                .degree_component(k)
                .expect("degree within range by construction");
            if fk.sup_norm() > DEGENERACY_TOL * self.scale {
                let l2 = fk.lp_norm(2.0).expect("p = 2 is valid");
                return Some((k, l2));
            }
        }
        None
    }
}

/// True when f = E f + sum_{k >= d} f_k, i.e. all Hoeffding terms of
/// degree 1..d-1 vanish within the degeneracy tolerance (absolute, on f
/// normalized to sup-norm 1).
pub fn is_degenerate_from(f: &FunctionTable, d: usize) -> Result<bool> {
    let n = f.space().n_coords();
    if d == 0 || d > n {
        return Err(Error::InvalidOrder {
            reason: format!("degree {d} out of range 1..={n}"),
        });
    }
    let dec = decompose(f)?;
    Ok(dec.low_degree_violation(d).is_none())
}

/// Fourier-Walsh expansion of a function on a Rademacher product space:
/// the multilinear polynomial with coefficients a_I = E f * prod_{i in I} X_i,
/// which reproduces f exactly. Computed with a fast Walsh-Hadamard
/// transform in O(N log N).
pub fn fourier_walsh(f: &FunctionTable) -> Result<MultilinearPolynomial> {
    let space = f.space();
    let n = space.n_coords();
    for i in 1..=n {
        if !space.coord(i).is_rademacher() {
            return Err(Error::NotRademacher { coord: i });
        }
    }
    if n > MAX_DECOMPOSITION_COORDS {
        return Err(Error::SubsetBudget {
            n,
            max_n: MAX_DECOMPOSITION_COORDS,
        });
    }

    // In-place butterfly: after processing bit b, v[idx] carries the
    // partial transform sum_{j over bit-b-prefix} f[j] * (-1)^{popcount(idx & j)}.
    let mut v = f.values().to_vec();
    let len = v.len();
    let mut half = 1;
    while half < len {
        let mut start = 0;
        while start < len {
            for i in start..start + half {
                let a = v[i];
                let b = v[i + half];
                v[i] = a + b;
                v[i + half] = a - b;
            }
            start += 2 * half;
        }
        half *= 2;
    }

    // With supports listed as (-1, +1), the character over S evaluates to
    // (-1)^{|S|} * (-1)^{popcount(idx & mask)}, so the transform needs a
    // parity sign and the uniform weight 2^{-n}.
    let norm = 1.0 / len as f64;
    let mut poly = MultilinearPolynomial::new(n);
    for (mask, &w) in v.iter().enumerate() {
        let parity = if (mask.count_ones() & 1) == 1 { -1.0 } else { 1.0 };
        let alpha = parity * w * norm;
        if alpha != 0.0 {
            poly.set_coeff(&mask_to_coords(mask as u64), alpha)?;
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_space, eval_polynomial, rademacher_space, FiniteDistribution};
    use approx::assert_relative_eq;

    fn table(n: usize, f: impl FnMut(&[f64]) -> f64) -> FunctionTable {
        let s = rademacher_space(n).unwrap();
        FunctionTable::from_fn(s, f).unwrap()
    }

    #[test]
    fn pure_pair_interaction_decomposes_to_single_component() {
        let f = table(2, |x| x[0] * x[1]);
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.mean(), 0.0);
        assert!(dec.component(&[1]).is_none());
        assert!(dec.component(&[2]).is_none());
        let h12 = dec.component(&[1, 2]).unwrap();
        assert_eq!(h12.values(), f.values());
    }

    #[test]
    fn mixed_degrees_split_into_their_components() {
        let f = table(2, |x| x[0] + x[0] * x[1]);
        let dec = decompose(&f).unwrap();
        let x1 = table(2, |x| x[0]);
        let x1x2 = table(2, |x| x[0] * x[1]);
        assert_eq!(dec.component(&[1]).unwrap().values(), x1.values());
        assert_eq!(dec.component(&[1, 2]).unwrap().values(), x1x2.values());
        assert!(dec.component(&[2]).is_none());
        assert_eq!(dec.mean(), 0.0);
    }

    #[test]
    fn degree_components_filter_by_subset_size() {
        let f = table(2, |x| x[0] * x[1]);
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.degree_component(2).unwrap().values(), f.values());
        assert_eq!(dec.degree_component(1).unwrap().values(), &[0.0; 4]);
    }

    #[test]
    fn reconstruction_matches_input_exactly_on_dyadic_tables() {
        // Integer values on a Rademacher space keep all arithmetic exact.
        let f = table(3, |x| {
            2.0 * x[0] + 4.0 * x[1] * x[2] - 8.0 * x[0] * x[1] * x[2] + 16.0
        });
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.reconstruct().unwrap().values(), f.values());
        assert_eq!(dec.mean(), 16.0);
    }

    #[test]
    fn degeneracy_detection() {
        let f = table(2, |x| x[0] * x[1]);
        assert!(is_degenerate_from(&f, 2).unwrap());
        let g = table(2, |x| x[0] + x[0] * x[1]);
        assert!(!is_degenerate_from(&g, 2).unwrap());
        assert!(is_degenerate_from(&g, 1).unwrap());
        assert!(is_degenerate_from(&f, 0).is_err());
        assert!(is_degenerate_from(&f, 3).is_err());
    }

    #[test]
    fn subset_budget_is_enforced() {
        let coords = vec![FiniteDistribution::point_mass(0.0).unwrap(); 21];
        let s = build_space(coords).unwrap();
        let f = FunctionTable::constant(s, 1.0);
        assert!(matches!(
            decompose(&f).unwrap_err(),
            Error::SubsetBudget { n: 21, max_n: 20 }
        ));
    }

    #[test]
    fn fourier_walsh_of_max() {
        let f = table(2, |x| x[0].max(x[1]));
        let p = fourier_walsh(&f).unwrap();
        assert_relative_eq!(p.coeff(&[]), 0.5);
        assert_relative_eq!(p.coeff(&[1]), 0.5);
        assert_relative_eq!(p.coeff(&[2]), 0.5);
        assert_relative_eq!(p.coeff(&[1, 2]), -0.5);
        // The expansion reproduces the table.
        let back = eval_polynomial(f.space(), &p).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn fourier_walsh_of_coordinate_and_constant() {
        let f = table(3, |x| x[0]);
        let p = fourier_walsh(&f).unwrap();
        assert_eq!(p.coeff(&[1]), 1.0);
        assert_eq!(p.terms().count(), 1);

        let c = table(2, |_| 2.5);
        let pc = fourier_walsh(&c).unwrap();
        assert_eq!(pc.coeff(&[]), 2.5);
        assert_eq!(pc.terms().count(), 1);
    }

    #[test]
    fn fourier_walsh_rejects_non_rademacher_coordinates() {
        let s = build_space(vec![
            FiniteDistribution::rademacher(),
            FiniteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let f = FunctionTable::constant(s, 1.0);
        assert!(matches!(
            fourier_walsh(&f).unwrap_err(),
            Error::NotRademacher { coord: 2 }
        ));
    }

    #[test]
    fn zero_function_stores_no_components() {
        let f = table(2, |_| 0.0);
        let dec = decompose(&f).unwrap();
        assert_eq!(dec.n_components(), 0);
        assert_eq!(dec.reconstruct().unwrap().values(), &[0.0; 4]);
    }

    #[test]
    fn degree_profile_sums_component_masses() {
        let f = table(2, |x| 3.0 + x[0] + x[0] * x[1]);
        let profile = decompose(&f).unwrap().degree_profile();
        assert_relative_eq!(profile[0], 9.0);
        assert_relative_eq!(profile[1], 1.0);
        assert_relative_eq!(profile[2], 1.0);
    }
}
