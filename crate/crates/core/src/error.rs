//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by construction, validation, and certificate routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A finite distribution failed validation (probabilities, support).
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    /// The joint outcome count exceeds the enumeration budget.
    #[error("enumeration too large: {outcomes} outcomes exceed budget {budget}")]
    EnumerationTooLarge { outcomes: u128, budget: u128 },

    /// 2^n subsets exceed the decomposition budget.
    #[error("subset count 2^{n} exceeds decomposition budget (n <= {max_n})")]
    SubsetBudget { n: usize, max_n: usize },

    /// Estimated tensor cost exceeds the configured budget.
    #[error("tensor cost {cost} exceeds budget {budget} (order {order}, {outcomes} outcomes)")]
    TensorBudget { cost: u128, budget: u128, order: usize, outcomes: usize },

    /// Mismatched coordinate counts or spaces.
    #[error("dimension mismatch: {reason}")]
    DimensionMismatch { reason: String },

    /// Functions built over different product spaces cannot be combined.
    #[error("mixed spaces: operands live on different product spaces")]
    MixedSpaces,

    /// An index or order parameter is out of range.
    #[error("invalid order/index: {reason}")]
    InvalidOrder { reason: String },

    /// L^p norms require p >= 1.
    #[error("invalid norm exponent p = {p}; need p >= 1")]
    InvalidExponent { p: f64 },

    /// A moment parameter is out of the admissible range.
    #[error("invalid moment parameter: {reason}")]
    InvalidParameter { reason: String },

    /// The operation requires E f = 0.
    #[error("mean is not zero: |E f| = {mean:e} exceeds tolerance {tol:e} (relative to sup-norm)")]
    MeanNotZero { mean: f64, tol: f64 },

    /// Hoeffding degeneracy precondition failed.
    #[error(
        "function is not degenerate from degree {required}: lowest nonvanishing Hoeffding degree is {lowest} (L2 mass {mass:e})"
    )]
    NotDegenerate { required: usize, lowest: usize, mass: f64 },

    /// Fourier-Walsh expansion requires every coordinate to be Rademacher.
    #[error("coordinate {coord} is not Rademacher (support {{-1,+1}} with probabilities 1/2)")]
    NotRademacher { coord: usize },

    /// A U-statistic kernel is not completely degenerate.
    #[error("kernel is not completely degenerate: E_{coord} h has sup-norm {mass:e}")]
    KernelNotDegenerate { coord: usize, mass: f64 },

    /// The declared kernel bound is violated on the table.
    #[error("kernel bound violated: sup |h| = {sup:e} exceeds declared M = {declared:e}")]
    KernelBoundExceeded { sup: f64, declared: f64 },

    /// Certificate hypotheses failed; the offending condition names are listed.
    #[error("certificate conditions failed: {}", failed.join(", "))]
    ConditionsFailed { failed: Vec<String> },

    /// An inequality that must hold mathematically was violated numerically.
    /// This indicates a bug, not a paper violation.
    #[error("BUG: claimed bound violated: {name} lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolated { name: String, lhs: f64, rhs: f64 },

    /// A required norm slot was not supplied.
    #[error("missing norm value: {slot}")]
    MissingNorm { slot: String },

    /// Operator kind not admissible for this operation.
    #[error("operator kind {kind} not supported here: {reason}")]
    UnsupportedKind { kind: String, reason: String },

    /// A hypermatrix failed its symmetry check.
    #[error("hypermatrix is not symmetric: entries differ by {deviation:e} at tolerance {tol:e}")]
    NotSymmetric { deviation: f64, tol: f64 },

    /// Empty input where at least one element is required.
    #[error("empty input: {reason}")]
    EmptyInput { reason: String },

    /// Monte Carlo parameters out of range.
    #[error("invalid Monte Carlo request: {reason}")]
    InvalidSampling { reason: String },

    /// A non-finite value appeared where finite reals are required.
    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    /// Failure while parsing a JSON input document.
    #[error("invalid input document: {reason}")]
    InvalidInput { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
