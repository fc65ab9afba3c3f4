//! Jackson-smoothed Chebyshev eigenvalue counting, matrix-free.
//!
//! The count of covariance eigenvalues in `[a, b]` is the trace of the
//! spectral projector, approximated by a damped Chebyshev expansion of the
//! interval indicator combined with Hutchinson probing:
//!
//! ```text
//! eta_[a,b] ~= (1/n_v) sum_k sum_{j=0..p} g_j^p gamma_j(a~, b~) z_k^T w_j^(k)
//! ```
//!
//! where `w_j = T_j(l(C)) z` follows the implicit three-term recurrence and
//! `l` maps the estimated spectral range onto `[-1, 1]`. The probe moments
//! `z^T w_j` do not depend on the interval, so one recurrence pass serves
//! every interval of a sweep; the interval only enters through the
//! `gamma_j` coefficients.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linop::CenteredOperator;
use crate::probes::{ProbeBudget, ProbeStream};
use crate::trace::block_ranges;

/// Transformed endpoints may overshoot [-1, 1] by at most this much before
/// the query is rejected; anything smaller is clamped.
const CLAMP_SLACK: f64 = 1e-9;

/// Estimated spectral range of the covariance matrix, mapped onto the
/// Chebyshev domain by `l(t) = (2t - shift) / scale`.
#[derive(Clone, Copy, Debug)]
pub struct SpectrumBounds {
    lambda_min_est: f64,
    lambda_max_est: f64,
}

impl SpectrumBounds {
    pub fn new(lambda_min_est: f64, lambda_max_est: f64) -> Result<Self> {
        if !lambda_min_est.is_finite() || lambda_min_est < 0.0 {
            return Err(Error::InvalidParameter {
                name: "lambda_min_est",
                reason: format!("must be finite and >= 0, got {lambda_min_est}"),
            });
        }
        if !lambda_max_est.is_finite() || lambda_max_est <= lambda_min_est {
            return Err(Error::InvalidParameter {
                name: "lambda_max_est",
                reason: format!(
                    "must be finite and exceed lambda_min_est = {lambda_min_est}, got {lambda_max_est}"
                ),
            });
        }
        Ok(Self {
            lambda_min_est,
            lambda_max_est,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min_est
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max_est
    }

    /// `shift = lambda_max + lambda_min`.
    pub fn shift(&self) -> f64 {
        self.lambda_max_est + self.lambda_min_est
    }

    /// `scale = lambda_max - lambda_min`.
    pub fn scale(&self) -> f64 {
        self.lambda_max_est - self.lambda_min_est
    }

    /// Affine map sending `[lambda_min, lambda_max]` onto `[-1, 1]`.
    pub fn transform(&self, t: f64) -> f64 {
        (2.0 * t - self.shift()) / self.scale()
    }

    fn transform_clamped(&self, t: f64) -> Result<f64> {
        let x = self.transform(t);
        if !(-1.0 - CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&x) {
            return Err(Error::BoundsTooTight {
                a: t,
                b: t,
                lambda_min: self.lambda_min_est,
                lambda_max: self.lambda_max_est,
            });
        }
        Ok(x.clamp(-1.0, 1.0))
    }
}

/// Jackson damping factor `g_j^p`, suppressing the Gibbs oscillations of the
/// truncated indicator expansion.
pub fn jackson_coefficient(j: usize, p: usize) -> f64 {
    debug_assert!(j <= p);
    let pf = p as f64;
    let alpha = PI / (pf + 2.0);
    let jp1 = (j + 1) as f64;
    (jp1 * alpha).sin() / ((pf + 2.0) * alpha.sin())
        + (1.0 - jp1 / (pf + 2.0)) * ((j as f64) * alpha).cos()
}

pub fn jackson_coefficients(p: usize) -> Vec<f64> {
    (0..=p).map(|j| jackson_coefficient(j, p)).collect()
}

/// Chebyshev coefficient of the indicator of `[a_t, b_t]` (transformed
/// endpoints in `[-1, 1]`).
pub fn gamma_coefficient(j: usize, a_t: f64, b_t: f64) -> f64 {
    let ca = a_t.acos();
    let cb = b_t.acos();
    if j == 0 {
        (ca - cb) / PI
    } else {
        let jf = j as f64;
        (2.0 / PI) * ((jf * ca).sin() - (jf * cb).sin()) / jf
    }
}

/// One step of the implicit recurrence
/// `w_{j+1} = 2 (2 X_c^T (X_c w_j) - shift (N-1) w_j) / (scale (N-1)) - w_{j-1}`.
pub fn chebyshev_apply_step(
    op: &CenteredOperator,
    bounds: &SpectrumBounds,
    w_j: ArrayView1<f64>,
    w_jm1: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let d = op.n_features();
    if w_j.len() != d || w_jm1.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if w_j.len() != d {
                w_j.len()
            } else {
                w_jm1.len()
            },
        });
    }
    let block = w_j.insert_axis(Axis(1));
    let prev = w_jm1.insert_axis(Axis(1));
    let next = cheb_step_block(op, bounds, &block.to_owned(), &prev.to_owned())?;
    Ok(next.index_axis(Axis(1), 0).to_owned())
}

/// `l(C) W` for a block of vectors.
fn apply_transformed_block(
    op: &CenteredOperator,
    bounds: &SpectrumBounds,
    w: &Array2<f64>,
) -> Result<Array2<f64>> {
    let nm1 = (op.n_samples() - 1) as f64;
    let shift = bounds.shift();
    let scale = bounds.scale();
    let gram = op.gram_block(w.view())?;
    let mut out = gram;
    out.zip_mut_with(w, |g, &wv| {
        *g = (2.0 * *g - shift * nm1 * wv) / (scale * nm1);
    });
    Ok(out)
}

fn cheb_step_block(
    op: &CenteredOperator,
    bounds: &SpectrumBounds,
    w_j: &Array2<f64>,
    w_jm1: &Array2<f64>,
) -> Result<Array2<f64>> {
    let mut out = apply_transformed_block(op, bounds, w_j)?;
    out.zip_mut_with(w_jm1, |o, &prev| {
        *o = 2.0 * *o - prev;
    });
    Ok(out)
}

/// Per-probe Chebyshev moments `m_kj = z_k^T T_j(l(C)) z_k`, reusable across
/// every interval that shares the same bounds and probe stream.
#[derive(Clone, Debug)]
pub struct ChebyshevMoments {
    bounds: SpectrumBounds,
    degree: usize,
    jackson: Vec<f64>,
    /// n_v rows, p + 1 columns.
    moments: Array2<f64>,
}

fn columnwise_dot(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Vec<f64> {
    a.columns()
        .into_iter()
        .zip(b.columns())
        .map(|(x, y)| x.dot(&y))
        .collect()
}

/// Computes moment rows for probes `first .. first + count`.
///
/// Only `ceil(p/2)` recurrence steps are run per probe: with `A` symmetric,
/// `z^T T_{2t}(A) z = 2 ||T_t z||^2 - z^T z` and
/// `z^T T_{2t+1}(A) z = 2 (T_{t+1} z . T_t z) - z^T T_1 z`, so the dot
/// products of neighbouring iterates cover twice the swept degree.
fn moment_rows(
    op: &CenteredOperator,
    bounds: &SpectrumBounds,
    degree: usize,
    first: u64,
    count: usize,
    stream: &ProbeStream,
) -> Result<Array2<f64>> {
    let d = op.n_features();
    let p = degree;
    let mut rows = Array2::zeros((count, p + 1));

    let blocks = block_ranges(count);
    let chunks = blocks
        .par_iter()
        .map(|&(offset, m)| -> Result<Array2<f64>> {
            let mut z = Array2::zeros((d, m));
            stream.fill_block(first + offset, &mut z);
            let mut chunk = Array2::zeros((m, p + 1));

            let m0 = columnwise_dot(z.view(), z.view());
            for (k, &v) in m0.iter().enumerate() {
                chunk[[k, 0]] = v;
            }
            if p == 0 {
                return Ok(chunk);
            }

            let mut w_prev = z.clone();
            let mut w_cur = apply_transformed_block(op, bounds, &z)?;
            let m1 = columnwise_dot(z.view(), w_cur.view());
            for (k, &v) in m1.iter().enumerate() {
                chunk[[k, 1]] = v;
            }

            let t_max = p.div_ceil(2);
            for t in 1..=t_max {
                if t >= 2 && 2 * t - 1 <= p {
                    let dots = columnwise_dot(w_cur.view(), w_prev.view());
                    for (k, &v) in dots.iter().enumerate() {
                        chunk[[k, 2 * t - 1]] = 2.0 * v - m1[k];
                    }
                }
                if 2 * t <= p {
                    let dots = columnwise_dot(w_cur.view(), w_cur.view());
                    for (k, &v) in dots.iter().enumerate() {
                        chunk[[k, 2 * t]] = 2.0 * v - m0[k];
                    }
                }
                if t < t_max {
                    let w_next = cheb_step_block(op, bounds, &w_cur, &w_prev)?;
                    w_prev = w_cur;
                    w_cur = w_next;
                }
            }
            Ok(chunk)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut row = 0;
    for chunk in chunks {
        for r in chunk.rows() {
            rows.row_mut(row).assign(&r);
            row += 1;
        }
    }
    Ok(rows)
}

/// Runs the full probe budget once; the result can answer any number of
/// interval queries against the same bounds.
pub fn chebyshev_moments(
    op: &CenteredOperator,
    bounds: SpectrumBounds,
    degree: usize,
    n_probes: usize,
    stream: &ProbeStream,
) -> Result<ChebyshevMoments> {
    if stream.dimension() != op.n_features() {
        return Err(Error::DimensionMismatch {
            expected: op.n_features(),
            got: stream.dimension(),
        });
    }
    if degree == 0 {
        return Err(Error::InvalidParameter {
            name: "degree",
            reason: "Chebyshev degree must be >= 1".into(),
        });
    }
    let moments = moment_rows(op, &bounds, degree, 0, n_probes, stream)?;
    Ok(ChebyshevMoments {
        bounds,
        degree,
        jackson: jackson_coefficients(degree),
        moments,
    })
}

impl ChebyshevMoments {
    pub fn bounds(&self) -> &SpectrumBounds {
        &self.bounds
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_probes(&self) -> usize {
        self.moments.nrows()
    }

    /// Count estimate for `[a, b]` from the cached moments.
    pub fn count_in(&self, a: f64, b: f64) -> Result<CountResult> {
        let coeff = Array1::from_vec(interval_coefficients(
            &self.bounds,
            &self.jackson,
            self.degree,
            a,
            b,
        )?);
        let per_probe = self.moments.dot(&coeff);
        let n_v = per_probe.len();
        let eta = per_probe.iter().sum::<f64>() / n_v as f64;
        Ok(CountResult {
            eta,
            eta_clamped: eta.max(0.0),
            probes_used: n_v,
        })
    }
}

/// Damped expansion coefficients of the indicator of `[a, b]` under the
/// given bounds; the per-probe count is the dot of these with the moments.
fn interval_coefficients(
    bounds: &SpectrumBounds,
    jackson: &[f64],
    degree: usize,
    a: f64,
    b: f64,
) -> Result<Vec<f64>> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    let map_err = |e: Error| match e {
        Error::BoundsTooTight { .. } => Error::BoundsTooTight {
            a,
            b,
            lambda_min: bounds.lambda_min(),
            lambda_max: bounds.lambda_max(),
        },
        other => other,
    };
    let a_t = bounds.transform_clamped(a).map_err(map_err)?;
    let b_t = bounds.transform_clamped(b).map_err(map_err)?;
    Ok((0..=degree)
        .map(|j| jackson[j] * gamma_coefficient(j, a_t, b_t))
        .collect())
}

/// Optional incremental stopping: probes are consumed in batches and the run
/// ends once the running mean settles.
#[derive(Clone, Copy, Debug)]
pub struct EarlyStop {
    pub batch_size: usize,
    pub rel_tol: f64,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self {
            batch_size: 16,
            rel_tol: 0.01,
        }
    }
}

/// A single eigenvalue-count request.
#[derive(Clone, Copy, Debug)]
pub struct CountQuery {
    pub a: f64,
    pub b: f64,
    pub degree: usize,
    pub budget: ProbeBudget,
    pub bounds: SpectrumBounds,
    pub early_stop: Option<EarlyStop>,
}

/// Raw and clamped count estimates; negative raw values are legal noise.
#[derive(Clone, Copy, Debug)]
pub struct CountResult {
    pub eta: f64,
    pub eta_clamped: f64,
    pub probes_used: usize,
}

/// Estimates the number of covariance eigenvalues in `[query.a, query.b]`.
pub fn count_eigenvalues(
    op: &CenteredOperator,
    query: &CountQuery,
    stream: &ProbeStream,
) -> Result<CountResult> {
    if stream.dimension() != op.n_features() {
        return Err(Error::DimensionMismatch {
            expected: op.n_features(),
            got: stream.dimension(),
        });
    }
    if query.degree == 0 {
        return Err(Error::InvalidParameter {
            name: "degree",
            reason: "Chebyshev degree must be >= 1".into(),
        });
    }
    let n_v = query.budget.n_probes();

    match query.early_stop {
        None => {
            let moments = chebyshev_moments(op, query.bounds, query.degree, n_v, stream)?;
            moments.count_in(query.a, query.b)
        }
        Some(es) => {
            let batch = es.batch_size.max(1);
            // Validate the interval before burning probes.
            let jackson = jackson_coefficients(query.degree);
            let coeff = Array1::from_vec(interval_coefficients(
                &query.bounds,
                &jackson,
                query.degree,
                query.a,
                query.b,
            )?);

            let mut used = 0usize;
            let mut running_sum = 0.0;
            let mut prev_mean: Option<f64> = None;
            while used < n_v {
                let m = batch.min(n_v - used);
                let rows = moment_rows(op, &query.bounds, query.degree, used as u64, m, stream)?;
                running_sum += rows.dot(&coeff).sum();
                used += m;
                let mean = running_sum / used as f64;
                if let Some(prev) = prev_mean {
                    if (mean - prev).abs() <= es.rel_tol * mean.abs().max(1.0) {
                        break;
                    }
                }
                prev_mean = Some(mean);
            }
            let eta = running_sum / used as f64;
            Ok(CountResult {
                eta,
                eta_clamped: eta.max(0.0),
                probes_used: used,
            })
        }
    }
}
