//! Stochastic trace estimation for the implicit covariance matrix.
//!
//! For Rademacher probes `z`, `E[z^T C z] = tr(C)`, and
//! `z^T C z = ||X_c z||^2 / (N - 1)` needs a single rectangular product.
//! The estimate is the mean over the probe budget.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linop::CenteredOperator;
use crate::probes::{ProbeBudget, ProbeStream, PROBE_BLOCK};

/// Trace estimate plus the per-probe quadratic forms that produced it.
#[derive(Clone, Debug)]
pub struct TraceEstimate {
    /// `tau = mean(per_probe)`, the estimated `tr(C)`.
    pub tau: f64,
    pub n_v_used: usize,
    /// `||X_c z_k||^2 / (N - 1)` per probe, kept for variance diagnostics
    /// and incremental checking.
    pub per_probe: Vec<f64>,
}

/// Runs the probe budget through the operator. Probe blocks are evaluated in
/// parallel but reduced in index order, so the result is identical for any
/// thread count.
pub fn estimate_trace(
    op: &CenteredOperator,
    budget: ProbeBudget,
    stream: &ProbeStream,
) -> Result<TraceEstimate> {
    if stream.dimension() != op.n_features() {
        return Err(Error::DimensionMismatch {
            expected: op.n_features(),
            got: stream.dimension(),
        });
    }
    let n_v = budget.n_probes();
    let d = op.n_features();
    let nm1 = (op.n_samples() - 1) as f64;

    let blocks: Vec<(u64, usize)> = block_ranges(n_v);
    let chunks = blocks
        .par_iter()
        .map(|&(first, m)| -> Result<Vec<f64>> {
            let mut z = Array2::zeros((d, m));
            stream.fill_block(first, &mut z);
            let h = op.apply_block(z.view())?;
            Ok(h.axis_iter(Axis(1))
                .map(|col| col.dot(&col) / nm1)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;

    let per_probe: Vec<f64> = chunks.into_iter().flatten().collect();
    let sum: f64 = per_probe.iter().sum();
    Ok(TraceEstimate {
        tau: sum / n_v as f64,
        n_v_used: n_v,
        per_probe,
    })
}

pub(crate) fn block_ranges(total: usize) -> Vec<(u64, usize)> {
    let mut blocks = Vec::with_capacity(total.div_ceil(PROBE_BLOCK));
    let mut first = 0usize;
    while first < total {
        let m = (total - first).min(PROBE_BLOCK);
        blocks.push((first as u64, m));
        first += m;
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DataMatrix;
    use ndarray::{array, Array2};

    fn diag_case() -> CenteredOperator {
        // X_c = [[1,0],[0,2],[0,0]] pre-centered; C = diag(0.5, 2), tr = 2.5.
        let data = DataMatrix::new(array![[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap();
        CenteredOperator::pre_centered(data)
    }

    #[test]
    fn zero_matrix_gives_zero_trace() {
        let data = DataMatrix::new(Array2::zeros((6, 4))).unwrap();
        let op = CenteredOperator::center(data);
        let budget = ProbeBudget::new(0.5, 0.5).unwrap();
        let est = estimate_trace(&op, budget, &ProbeStream::new(0, 4)).unwrap();
        assert_eq!(est.tau, 0.0);
    }

    #[test]
    fn diagonal_covariance_is_exact_with_one_probe() {
        let op = diag_case();
        let budget = ProbeBudget::with_cap(0.5, 0.5, 1).unwrap();
        for seed in 0..20 {
            let est = estimate_trace(&op, budget, &ProbeStream::new(seed, 2)).unwrap();
            assert_eq!(est.n_v_used, 1);
            assert!((est.tau - 2.5).abs() < 1e-12, "tau = {}", est.tau);
        }
    }

    #[test]
    fn tau_is_mean_of_per_probe() {
        let op = diag_case();
        let budget = ProbeBudget::new(0.5, 0.5).unwrap();
        let est = estimate_trace(&op, budget, &ProbeStream::new(3, 2)).unwrap();
        let mean = est.per_probe.iter().sum::<f64>() / est.per_probe.len() as f64;
        assert_eq!(est.tau, mean);
        assert!(est.tau >= 0.0);
        assert_eq!(est.per_probe.len(), est.n_v_used);
    }

    #[test]
    fn estimator_is_unbiased_across_seeds() {
        // mean of tau over many seeds within 2 standard errors of the truth
        let data = array![
            [1.0, 0.5, -0.25],
            [-2.0, 1.5, 0.75],
            [0.25, -1.0, 2.0],
            [1.5, 2.5, -0.5],
            [-0.75, 0.25, 1.25],
            [2.0, -1.5, 0.5]
        ];
        let op = CenteredOperator::center(DataMatrix::new(data).unwrap());
        let truth = {
            let c = crate::oracle::dense_covariance(&op).unwrap();
            (0..3).map(|i| c[[i, i]]).sum::<f64>()
        };
        let budget = ProbeBudget::with_cap(0.5, 0.5, 8).unwrap();
        let taus: Vec<f64> = (0..500)
            .map(|seed| {
                estimate_trace(&op, budget, &ProbeStream::new(seed, 3))
                    .unwrap()
                    .tau
            })
            .collect();
        let mean = taus.iter().sum::<f64>() / taus.len() as f64;
        let var = taus.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
            / (taus.len() - 1) as f64;
        let stderr = (var / taus.len() as f64).sqrt();
        assert!(
            (mean - truth).abs() <= 2.0 * stderr,
            "mean {mean} vs truth {truth}, 2 SE = {}",
            2.0 * stderr
        );
    }

    #[test]
    fn power_of_two_scaling_is_exactly_quadratic() {
        let base = array![[1.5, -0.25], [2.0, 0.75], [-1.0, 3.0], [0.5, -2.0]];
        let scaled = base.mapv(|x| 2.0 * x);
        let budget = ProbeBudget::new(0.5, 0.5).unwrap();
        let stream = ProbeStream::new(11, 2);
        let t1 = estimate_trace(
            &CenteredOperator::center(DataMatrix::new(base).unwrap()),
            budget,
            &stream,
        )
        .unwrap();
        let t2 = estimate_trace(
            &CenteredOperator::center(DataMatrix::new(scaled).unwrap()),
            budget,
            &stream,
        )
        .unwrap();
        assert_eq!(t2.tau, 4.0 * t1.tau);
    }

    #[test]
    fn general_scaling_is_quadratic_to_roundoff() {
        let base = array![[1.5, -0.25], [2.0, 0.75], [-1.0, 3.0], [0.5, -2.0]];
        let scaled = base.mapv(|x| 3.0 * x);
        let budget = ProbeBudget::new(0.5, 0.5).unwrap();
        let stream = ProbeStream::new(11, 2);
        let t1 = estimate_trace(
            &CenteredOperator::center(DataMatrix::new(base).unwrap()),
            budget,
            &stream,
        )
        .unwrap();
        let t2 = estimate_trace(
            &CenteredOperator::center(DataMatrix::new(scaled).unwrap()),
            budget,
            &stream,
        )
        .unwrap();
        assert!((t2.tau - 9.0 * t1.tau).abs() < 1e-12 * t2.tau.abs());
    }

    #[test]
    fn stream_dimension_must_match_operator() {
        let op = diag_case();
        let budget = ProbeBudget::new(0.5, 0.5).unwrap();
        assert!(matches!(
            estimate_trace(&op, budget, &ProbeStream::new(0, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
