use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// L1 distances are only defined between distributions with a density.
    #[error("distribution has zero variance (Dirac delta)")]
    ZeroVariance,

    #[error("singular parameter region (mu = {mu}, sigma = {sigma})")]
    SingularRegion { mu: f64, sigma: f64 },

    #[error("block count {blocks} does not divide n = {n}")]
    BlockMismatch { n: usize, blocks: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not orthogonal (max |O^T O - I| = {residual:e})")]
    NotOrthogonal { residual: f64 },

    #[error("matrix is not a valid covariance: {0}")]
    InvalidCovariance(String),

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("water-filling objective not monotone at W = {water_level}")]
    NonMonotone { water_level: f64 },

    #[error("bisection failed: residual {residual:e} above tolerance {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },
}
