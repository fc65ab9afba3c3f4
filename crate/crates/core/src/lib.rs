//! Matrix-free intrinsic-dimension estimation.
//!
//! The pipeline never forms the covariance matrix
//! `C = X_c^T X_c / (N - 1)`:
//!
//! 1. [`trace`] estimates `tr(C)` (the total variance) with Rademacher
//!    probes and one rectangular product per probe.
//! 2. [`ritz`] runs a few CGLS iterations to bracket the spectrum with Ritz
//!    values, extremes first.
//! 3. [`chebcount`] counts eigenvalues per bracket interval with a
//!    Jackson-smoothed Chebyshev expansion of the interval indicator.
//! 4. [`estimator`] sweeps the intervals from the top, attributing variance
//!    to the counted eigenvalues until the target ratio of the total
//!    variance is reached; the crossing interval resolves the fractional
//!    dimension estimate.
//!
//! [`oracle`] provides the dense ground truth (explicit covariance, Jacobi
//! eigendecomposition, exact counts, PCA threshold dimensions) used to test
//! every stochastic component, and [`datagen`] produces the seeded synthetic
//! inputs. Everything is deterministic for a given seed, regardless of
//! thread count.

// negated comparisons like `!(x > 0.0)` are deliberate: they reject NaN,
// which `x <= 0.0` would silently accept
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebcount;
pub mod datagen;
pub mod error;
pub mod estimator;
pub mod kmeans;
pub mod linop;
pub mod oracle;
pub mod probes;
pub mod ritz;
pub mod trace;

pub use chebcount::{
    chebyshev_apply_step, chebyshev_moments, count_eigenvalues, gamma_coefficient,
    jackson_coefficient, jackson_coefficients, ChebyshevMoments, CountQuery, CountResult,
    EarlyStop, SpectrumBounds,
};
pub use datagen::{make_affine, make_low_rank, make_sphere, LowRankSpec};
pub use error::{Error, Result};
pub use estimator::{
    estimate_id, estimate_id_clustered, finalize_linear, interval_edges, interval_variance,
    ClusterRun, ClusteredIdReport, EstimatorConfig, FinalizeMode, IdReport, IntervalRecord,
    StopReason, SummationMode,
};
pub use kmeans::{kmeans, KmeansResult};
pub use linop::{CenteredOperator, DataMatrix};
pub use oracle::{
    dense_covariance, eigen_decompose, exact_count, pca_id_ratio, pca_id_threshold, DenseSpectrum,
};
pub use probes::{derive_seed, ProbeBudget, ProbeStream};
pub use ritz::{
    cgls_coefficients, ritz_values, tridiagonal_eigenvalues, tridiagonal_from, Breakdown,
    CglsTrace, RitzSpectrum, TridiagonalMatrix,
};
pub use trace::{estimate_trace, TraceEstimate};
