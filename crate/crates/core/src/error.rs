use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |m - m^H| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid setting distribution: {0}")]
    InvalidSettingDistribution(String),

    #[error("invalid probability law: {0}")]
    InvalidLaw(String),

    #[error("setting pattern {pattern} has zero weight")]
    ZeroSettingWeight { pattern: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("vertex count {count} exceeds cap {cap}")]
    TooManyVertices { count: u128, cap: u64 },

    #[error("constructed inequality fails on vertex {vertex}: value {value} > bound {bound}")]
    ValidityCheckFailed { vertex: u64, value: f64, bound: f64 },

    #[error("invalid quantum model: {0}")]
    InvalidModel(String),

    #[error("top eigenspace is not one-dimensional (gap {gap:e})")]
    DegenerateEigenvector { gap: f64 },

    #[error("solver hit the iteration cap ({iterations}) with KKT slack {kkt_slack:e}")]
    IterationCapExceeded { iterations: usize, kkt_slack: f64 },

    #[error("solver result is not converged")]
    NotConverged,

    #[error("divergence is zero; the law is classical and defines no face")]
    ZeroDivergence,

    #[error("law is classical at full efficiency; no detection threshold exists")]
    NoViolation,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
