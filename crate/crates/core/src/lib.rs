//! Exact machinery for concentration of measure on finite product spaces.
//!
//! The crate enumerates functions of independent finite-support random
//! variables exactly and exposes:
//!
//! - difference operators of all orders and their hypermatrix fields
//!   ([`diff_ops`]),
//! - Hoeffding decompositions and Fourier-Walsh expansions ([`hoeffding`]),
//! - Efron-Stein inequalities and variance identities ([`efron_stein`]),
//! - explicit-constant moment and exponential-moment certificates with
//!   tail bounds ([`bounds`]),
//! - derivative tensors, operator norms, and certificate calculators for
//!   the smooth (log-Sobolev / sphere) settings ([`smooth`]),
//! - deterministic Monte Carlo validation ([`montecarlo`]),
//! - JSON input parsing shared with the command-line tool ([`io`]).
//!
//! Every claimed inequality is checkable here by exact summation over the
//! outcome enumeration, so tests treat numerical violations as bugs.

pub mod bounds;
pub mod diff_ops;
pub mod efron_stein;
pub mod error;
pub mod hoeffding;
pub mod io;
pub mod montecarlo;
pub mod rng;
pub mod smooth;
pub mod space;

pub use error::{Error, Result};
pub use space::{
    build_space, eval_polynomial, rademacher_space, FiniteDistribution, FunctionTable,
    MultilinearPolynomial, ProductSpace, SpaceRef,
};
