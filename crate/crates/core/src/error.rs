use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("factorization failed at pivot {pivot}: {reason}")]
    Factorization { pivot: usize, reason: String },

    #[error("tensor field is not symmetric at node {node} (|A_kj - A_jk| = {defect:e})")]
    NonSymmetricTensor { node: usize, defect: f64 },

    #[error("scalar resolvent did not converge after {iterations} bisection steps (r = {r})")]
    ResolventNonConvergence { iterations: usize, r: f64 },

    #[error("viscosity nu = {nu} with nonzero noise: the case nu = 0 forces b = 0")]
    DegenerateViscosity { nu: f64 },

    #[error("noise coefficients are not admissible: C~ gamma + |b|^2 = {lhs} > 2 nu = {bound}")]
    NotAdmissible { lhs: f64, bound: f64 },

    #[error("dimension condition 1 <= d < 2(1+m)/(1-m) fails for d = {dimension}, m = {m}{hint}")]
    DimensionCondition { dimension: usize, m: f64, hint: &'static str },

    #[error("Newton iteration failed at step {step}: residuals {residuals:?}")]
    StepFailure { step: usize, residuals: Vec<f64> },

    #[error("{failed} of {total} paths failed (first failures: {indices:?})")]
    EnsembleFailure { failed: usize, total: usize, indices: Vec<u64> },

    #[error("sandpile stabilization exceeded {rounds} rounds")]
    RoundCapExceeded { rounds: usize },

    #[error("site {site} outside lattice of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
