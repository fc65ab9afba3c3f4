use thiserror::Error;

/// Errors shared across the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("right-hand side is numerically zero; no Krylov space to build")]
    DegenerateRhs,

    #[error("degenerate spectrum: largest Ritz value must be positive")]
    DegenerateSpectrum,

    #[error("invalid interval: lower endpoint {a} must be below upper endpoint {b}")]
    InvalidInterval { a: f64, b: f64 },

    #[error(
        "interval [{a}, {b}] maps outside [-1, 1] under spectrum bounds [{lambda_min}, {lambda_max}]"
    )]
    BoundsTooTight {
        a: f64,
        b: f64,
        lambda_min: f64,
        lambda_max: f64,
    },

    #[error("invalid estimator configuration: {0}")]
    ConfigInvalid(String),

    #[error("matrix too large for the dense oracle: D = {0} exceeds the guard {1}")]
    TooLarge(usize, usize),

    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,

    #[error("total variance is zero")]
    ZeroVariance,

    #[error("no consecutive-eigenvalue ratio reaches the requested gap")]
    NoGapFound,

    #[error("clustering collapsed below two usable clusters")]
    ClusteringDegenerate,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
