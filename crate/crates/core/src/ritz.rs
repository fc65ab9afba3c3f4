//! CGLS recurrence coefficients and the Ritz values they imply.
//!
//! Running CGLS on `X_c` is CG on the normal equations
//! `X_c^T X_c x = X_c^T b`; only the alpha/beta history is kept, the solution
//! updates are skipped. The history defines the Lanczos tridiagonal matrix
//!
//! ```text
//! T[0][0]   = 1/alpha_0
//! T[i][i]   = 1/alpha_i + beta_{i-1}/alpha_{i-1}
//! T[i][i+1] = sqrt(beta_i)/alpha_i
//! ```
//!
//! whose eigenvalues (Ritz values) approximate the spectrum of
//! `X_c^T X_c`, extremes first. Dividing by `N - 1` turns them into
//! covariance-eigenvalue brackets.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linop::CenteredOperator;
use crate::probes::ProbeStream;

/// Relative floor (against gamma_0) below which the Krylov recurrence is
/// considered exhausted.
const BREAKDOWN_FLOOR: f64 = 1e-28;

/// Degenerate right-hand-side threshold relative to the Frobenius norm.
const RHS_FLOOR: f64 = 1e-14;

/// Default dedup tolerance for merging numerically identical Ritz values.
pub const RITZ_DEDUP_REL_TOL: f64 = 1e-10;

const DEFAULT_FALLBACK_SEED: u64 = 0x5249_444D; // "RIDM"

/// Alpha/beta history of a CGLS run.
#[derive(Clone, Debug)]
pub struct CglsTrace {
    /// `alpha_0 .. alpha_{k-1}`, all positive for a PSD system.
    pub alphas: Vec<f64>,
    /// `beta_0 .. beta_{k-2}`.
    pub betas: Vec<f64>,
    pub iterations_run: usize,
    pub breakdown: Option<Breakdown>,
}

/// Why an iteration stopped before the requested count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Breakdown {
    /// The Krylov space is exhausted (residual or direction underflow); the
    /// field is the 1-based index of the iteration that could not proceed.
    ExhaustedKrylov { iteration: usize },
}

/// Runs the CGLS recurrence with the default right-hand side
/// `b = X_c 1 / ||X_c 1||` (falling back to a seeded Rademacher vector when
/// that is numerically zero) and `x_0 = 0`.
pub fn cgls_coefficients(
    op: &CenteredOperator,
    n_k: usize,
    reorthogonalize: bool,
) -> Result<CglsTrace> {
    cgls_coefficients_seeded(op, n_k, reorthogonalize, DEFAULT_FALLBACK_SEED)
}

pub fn cgls_coefficients_seeded(
    op: &CenteredOperator,
    n_k: usize,
    reorthogonalize: bool,
    fallback_seed: u64,
) -> Result<CglsTrace> {
    let d = op.n_features();
    let n = op.n_samples();
    if n_k == 0 || n_k > d {
        return Err(Error::InvalidParameter {
            name: "n_k",
            reason: format!("must satisfy 1 <= n_k <= D = {d}, got {n_k}"),
        });
    }

    let frobenius = op.centered_frobenius();
    let ones = Array1::ones(d);
    let mut b = op.apply(ones.view())?;
    let mut norm_b = b.dot(&b).sqrt();
    if norm_b < RHS_FLOOR * frobenius || norm_b == 0.0 {
        // Row sums vanish after centering; any generic b spans the same
        // Krylov information, so use a seeded Rademacher vector.
        b = ProbeStream::new(fallback_seed, n).probe(0);
        norm_b = b.dot(&b).sqrt();
    }
    b.mapv_inplace(|x| x / norm_b);

    // x0 = 0, so r0 = b.
    let r = b;
    let mut s = op.apply_transpose(r.view())?;
    let mut gamma = s.dot(&s);
    if !(gamma > frobenius * frobenius * RHS_FLOOR * RHS_FLOOR) || gamma == 0.0 {
        return Err(Error::DegenerateRhs);
    }
    let gamma0 = gamma;

    let mut basis: Vec<Array1<f64>> = Vec::new();
    if reorthogonalize {
        basis.push(&s / gamma.sqrt());
    }

    let mut p = s.clone();
    let mut residual = r;
    let mut alphas = Vec::with_capacity(n_k);
    let mut betas = Vec::with_capacity(n_k);
    let mut breakdown = None;

    for i in 0..n_k {
        if gamma <= BREAKDOWN_FLOOR * gamma0 {
            breakdown = Some(Breakdown::ExhaustedKrylov { iteration: i + 1 });
            break;
        }
        let q = op.apply(p.view())?;
        let qq = q.dot(&q);
        if qq <= BREAKDOWN_FLOOR * gamma0 {
            breakdown = Some(Breakdown::ExhaustedKrylov { iteration: i + 1 });
            break;
        }
        let alpha = gamma / qq;
        alphas.push(alpha);
        residual.scaled_add(-alpha, &q);
        s = op.apply_transpose(residual.view())?;
        if reorthogonalize {
            // Two projection passes keep the implicit Lanczos basis
            // orthogonal in finite precision.
            for _ in 0..2 {
                for v in &basis {
                    let c = v.dot(&s);
                    if c != 0.0 {
                        s.scaled_add(-c, v);
                    }
                }
            }
        }
        let gamma_next = s.dot(&s);
        let beta = gamma_next / gamma;
        betas.push(beta);
        p.mapv_inplace(|x| x * beta);
        p += &s;
        if reorthogonalize && gamma_next > 0.0 {
            basis.push(&s / gamma_next.sqrt());
        }
        gamma = gamma_next;
    }

    betas.truncate(alphas.len().saturating_sub(1));
    Ok(CglsTrace {
        iterations_run: alphas.len(),
        alphas,
        betas,
        breakdown,
    })
}

/// Symmetric tridiagonal matrix held as its diagonal and off-diagonal.
#[derive(Clone, Debug)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

/// Assembles the Lanczos tridiagonal matrix from a CGLS history.
pub fn tridiagonal_from(trace: &CglsTrace) -> TridiagonalMatrix {
    let k = trace.alphas.len();
    assert!(k >= 1, "need at least one alpha");
    let mut diag = vec![0.0; k];
    let mut offdiag = vec![0.0; k.saturating_sub(1)];
    diag[0] = 1.0 / trace.alphas[0];
    for i in 1..k {
        diag[i] = 1.0 / trace.alphas[i] + trace.betas[i - 1] / trace.alphas[i - 1];
        offdiag[i - 1] = trace.betas[i - 1].sqrt() / trace.alphas[i - 1];
    }
    TridiagonalMatrix { diag, offdiag }
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, via
/// bisection on Sturm sign counts.
pub fn tridiagonal_eigenvalues(t: &TridiagonalMatrix) -> Vec<f64> {
    let k = t.diag.len();
    if k == 0 {
        return Vec::new();
    }
    let off2: Vec<f64> = t.offdiag.iter().map(|b| b * b).collect();

    // Gershgorin bounds.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let mut radius = 0.0;
        if i > 0 {
            radius += t.offdiag[i - 1].abs();
        }
        if i < k - 1 {
            radius += t.offdiag[i].abs();
        }
        lo = lo.min(t.diag[i] - radius);
        hi = hi.max(t.diag[i] + radius);
    }
    let span = (hi - lo).max(lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * span;
    hi += 1e-12 * span;

    // Number of eigenvalues strictly below x.
    let count_below = |x: f64| -> usize {
        let mut count = 0;
        let mut d = 1.0f64;
        for i in 0..k {
            let sub = if i > 0 { off2[i - 1] / d } else { 0.0 };
            d = (t.diag[i] - x) - sub;
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };

    let mut eigenvalues = Vec::with_capacity(k);
    let mut left_edge = lo;
    for idx in 0..k {
        let mut a = left_edge;
        let mut b = hi;
        for _ in 0..200 {
            let tol = f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            if b - a <= tol {
                break;
            }
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if count_below(mid) > idx {
                b = mid;
            } else {
                a = mid;
            }
        }
        let value = 0.5 * (a + b);
        eigenvalues.push(value);
        left_edge = a;
    }
    eigenvalues
}

/// Descending Ritz values of the covariance matrix (T eigenvalues divided
/// by `N - 1`), plus the recurrence history that produced them.
#[derive(Clone, Debug)]
pub struct RitzSpectrum {
    /// Descending; one value per iteration actually run.
    pub values: Vec<f64>,
    pub source: CglsTrace,
}

impl RitzSpectrum {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Merges values whose relative gap is below `rel_tol`, keeping the
    /// larger representative; the result is strictly descending.
    pub fn deduplicated(&self, rel_tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            match out.last() {
                Some(&prev) if (prev - v).abs() <= rel_tol * prev.abs().max(v.abs()) => {}
                _ => out.push(v),
            }
        }
        out
    }
}

/// Runs CGLS for `n_k` steps and extracts covariance-eigenvalue brackets.
pub fn ritz_values(
    op: &CenteredOperator,
    n_k: usize,
    reorthogonalize: bool,
) -> Result<RitzSpectrum> {
    ritz_values_seeded(op, n_k, reorthogonalize, DEFAULT_FALLBACK_SEED)
}

pub fn ritz_values_seeded(
    op: &CenteredOperator,
    n_k: usize,
    reorthogonalize: bool,
    fallback_seed: u64,
) -> Result<RitzSpectrum> {
    let trace = cgls_coefficients_seeded(op, n_k, reorthogonalize, fallback_seed)?;
    if trace.alphas.is_empty() {
        return Err(Error::DegenerateRhs);
    }
    let t = tridiagonal_from(&trace);
    let nm1 = (op.n_samples() - 1) as f64;
    let mut values = tridiagonal_eigenvalues(&t);
    for v in &mut values {
        *v /= nm1;
    }
    values.reverse();
    Ok(RitzSpectrum {
        values,
        source: trace,
    })
}
