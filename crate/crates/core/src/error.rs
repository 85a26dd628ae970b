use thiserror::Error;

/// Invariant violations detected while validating a [`MarketConfig`](crate::MarketConfig).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("market needs at least one trader and one share type (got N={traders}, L={share_types})")]
    Empty { traders: usize, share_types: usize },
    #[error("{field} has the wrong shape: {detail}")]
    Shape { field: &'static str, detail: String },
    #[error("coupling is not symmetric: p[{i}][{j}][{share}]={forward} but p[{j}][{i}][{share}]={backward}")]
    SymmetryViolation {
        i: usize,
        j: usize,
        share: usize,
        forward: f64,
        backward: f64,
    },
    #[error("diagonal coupling p[{trader}][{trader}][{share}]={value} must vanish")]
    DiagonalCoupling { trader: usize, share: usize, value: f64 },
    #[error("coupling p[{i}][{j}][{share}]={value} must be a finite nonnegative number")]
    NegativeCoupling {
        i: usize,
        j: usize,
        share: usize,
        value: f64,
    },
    #[error("frequency {what} = {value} must be strictly positive")]
    NonpositiveFrequency { what: String, value: f64 },
    #[error("interaction strength lambda = {0} must be finite and nonnegative")]
    NegativeLambda(f64),
}

/// Errors raised by the simulation operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("state {0} does not belong to the sector basis")]
    StateNotInBasis(String),
    #[error("invalid price trajectory: {0}")]
    Trajectory(String),
    #[error("time {t} outside the simulated window [0, {end}]")]
    TimeOutOfRange { t: f64, end: f64 },
    #[error("initial vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("exchange generated a state outside the basis: {0}")]
    LeavesBasis(String),
    #[error("first-order transition probability is undefined for identical initial and final states")]
    SameState,
    #[error("operation requires {expected} price intervals, trajectory has {actual}")]
    IntervalCount { expected: usize, actual: usize },
    #[error("Dyson workload dim*order = {work} exceeds the configured cap {cap}")]
    BasisTooLarge { work: usize, cap: usize },
    #[error("eigendecomposition failed: {0}")]
    Linalg(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
