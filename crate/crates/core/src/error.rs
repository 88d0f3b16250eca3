use thiserror::Error;

/// Errors produced by construction and validation of domain values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("thermal system needs at least two levels, got {0}")]
    TooFewLevels(usize),

    #[error("energy at index {index} must be a finite real or +inf")]
    InvalidEnergy { index: usize },

    #[error("partition function vanishes: every level has infinite energy")]
    VanishingPartitionFunction,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("population entry {index} = {value} is below the -{tol} floor")]
    NegativePopulation { index: usize, value: f64, tol: f64 },

    #[error("population sums to {sum}, outside [1 - {tol}, 1 + {tol}]")]
    UnnormalizedPopulation { sum: f64, tol: f64 },

    #[error("parameter {name} = {value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("matrix entry ({row},{col}) = {value} violates non-negativity")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("matrix failed validation: {0}")]
    InvalidMatrix(String),

    #[error("base rates must be symmetric and non-negative: ({row},{col}) = {value}")]
    InvalidBaseRate { row: usize, col: usize, value: f64 },

    #[error("curve evaluated at x = {x}, outside [0, {z}]")]
    CurveDomain { x: f64, z: f64 },

    #[error("thermalization pair ({i},{j}) invalid: {reason}")]
    BadThermalizationPair {
        i: usize,
        j: usize,
        reason: &'static str,
    },

    #[error("ordering must have exactly three levels with the yield level last")]
    MalformedOrdering,

    #[error("rejection sampler gave up after {0} attempts")]
    SamplerExhausted(u64),

    #[error("spectral function argument {0} must be positive")]
    NonPositiveEigenvalue(f64),
}
