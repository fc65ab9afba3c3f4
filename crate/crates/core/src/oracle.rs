//! Dense ground truth at desk scale: explicit covariance construction, full
//! symmetric eigendecomposition via cyclic Jacobi rotations, exact interval
//! counts, and the PCA variance-threshold dimensions. Everything stochastic
//! in this crate is tested against this module.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linop::CenteredOperator;

/// Upper bound on D for the dense path.
pub const DENSE_DIMENSION_GUARD: usize = 2000;

/// Descending eigenvalues of the covariance matrix plus their sum.
#[derive(Clone, Debug)]
pub struct DenseSpectrum {
    /// `lambda_1 >= ... >= lambda_D >= 0`; tiny negative round-off is
    /// clamped to zero.
    pub eigenvalues: Vec<f64>,
    pub trace: f64,
}

/// Materializes `C = X_c^T X_c / (N - 1)` explicitly.
pub fn dense_covariance(op: &CenteredOperator) -> Result<Array2<f64>> {
    let d = op.n_features();
    if d > DENSE_DIMENSION_GUARD {
        return Err(Error::TooLarge(d, DENSE_DIMENSION_GUARD));
    }
    let mut xc = op.data().values().to_owned();
    for mut row in xc.rows_mut() {
        row.zip_mut_with(&op.col_means(), |x, mu| *x -= mu);
    }
    let nm1 = (op.n_samples() - 1) as f64;
    let mut c = xc.t().dot(&xc);
    c.mapv_inplace(|x| x / nm1);
    Ok(c)
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
pub fn eigen_decompose(c: ArrayView2<f64>) -> Result<DenseSpectrum> {
    let (rows, cols) = c.dim();
    if rows != cols {
        return Err(Error::NotSymmetric);
    }
    let d = rows;
    let scale = c.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    for i in 0..d {
        for j in (i + 1)..d {
            if (c[[i, j]] - c[[j, i]]).abs() > 1e-9 * scale.max(1e-300) {
                return Err(Error::NotSymmetric);
            }
        }
    }

    // flat row-major working copy
    let mut a: Vec<f64> = c.iter().copied().collect();
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frobenius == 0.0 {
        return Ok(DenseSpectrum {
            eigenvalues: vec![0.0; d],
            trace: 0.0,
        });
    }

    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    acc += a[i * d + j] * a[i * d + j];
                }
            }
        }
        acc.sqrt()
    };

    for _sweep in 0..60 {
        if off_norm(&a) <= 1e-13 * frobenius {
            break;
        }
        for p in 0..d - 1 {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    1.0 / (theta - (theta * theta + 1.0).sqrt())
                };
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                // columns p and q
                for i in 0..d {
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    a[i * d + p] = cos * aip - sin * aiq;
                    a[i * d + q] = sin * aip + cos * aiq;
                }
                // rows p and q
                for i in 0..d {
                    let api = a[p * d + i];
                    let aqi = a[q * d + i];
                    a[p * d + i] = cos * api - sin * aqi;
                    a[q * d + i] = sin * api + cos * aqi;
                }
            }
        }
    }

    let mut eigenvalues: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    let lam_max_abs = eigenvalues.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    for v in &mut eigenvalues {
        if *v < 0.0 && *v >= -1e-10 * lam_max_abs.max(1e-300) {
            *v = 0.0;
        }
    }
    let trace = eigenvalues.iter().sum();
    Ok(DenseSpectrum { eigenvalues, trace })
}

/// Exact `#{lambda_i : a <= lambda_i <= b}` (closed interval).
pub fn exact_count(spec: &DenseSpectrum, a: f64, b: f64) -> Result<usize> {
    if !(a < b) {
        return Err(Error::InvalidInterval { a, b });
    }
    Ok(spec
        .eigenvalues
        .iter()
        .filter(|&&lam| lam >= a && lam <= b)
        .count())
}

/// Smallest k whose leading eigenvalues reach the variance ratio `theta`.
pub fn pca_id_threshold(spec: &DenseSpectrum, theta: f64) -> Result<usize> {
    if !theta.is_finite() || theta <= 0.0 || theta >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "theta",
            reason: format!("must lie strictly inside (0, 1), got {theta}"),
        });
    }
    if !(spec.trace > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut cumulative = 0.0;
    for (i, lam) in spec.eigenvalues.iter().enumerate() {
        cumulative += lam;
        if cumulative / spec.trace >= theta {
            return Ok(i + 1);
        }
    }
    Ok(spec.eigenvalues.len())
}

/// Smallest k with `lambda_k / lambda_{k+1} >= alpha_gap`.
pub fn pca_id_ratio(spec: &DenseSpectrum, alpha_gap: f64) -> Result<usize> {
    if !alpha_gap.is_finite() || alpha_gap <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "alpha_gap",
            reason: format!("must exceed 1, got {alpha_gap}"),
        });
    }
    for (i, pair) in spec.eigenvalues.windows(2).enumerate() {
        let ratio = pair[0] / pair[1];
        if ratio >= alpha_gap {
            return Ok(i + 1);
        }
    }
    Err(Error::NoGapFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DataMatrix;
    use crate::ritz::{tridiagonal_eigenvalues, TridiagonalMatrix};
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_data_gives_zero_covariance() {
        let data = DataMatrix::new(Array2::zeros((5, 3))).unwrap();
        let op = CenteredOperator::center(data);
        let c = dense_covariance(&op).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
        let spec = eigen_decompose(c.view()).unwrap();
        assert_eq!(spec.trace, 0.0);
    }

    #[test]
    fn diag_case_covariance() {
        let data = DataMatrix::new(array![[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap();
        let op = CenteredOperator::pre_centered(data);
        let c = dense_covariance(&op).unwrap();
        assert_eq!(c, array![[0.5, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn construction_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Array2::from_shape_fn((50, 10), |_| rng.random::<f64>() * 2.0 - 1.0);
        let op = CenteredOperator::center(DataMatrix::new(m).unwrap());
        let c = dense_covariance(&op).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert!((c[[i, j]] - c[[j, i]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_examples() {
        let spec =
            eigen_decompose(array![[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]].view())
                .unwrap();
        assert_eq!(spec.eigenvalues, vec![3.0, 2.0, 1.0]);

        let spec = eigen_decompose(array![[2.0, 1.0], [1.0, 2.0]].view()).unwrap();
        assert_relative_eq!(spec.eigenvalues[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(spec.eigenvalues[1], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn eigen_sum_matches_diagonal_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let raw = Array2::from_shape_fn((20, 20), |_| rng.random::<f64>() * 2.0 - 1.0);
        let sym = (&raw + &raw.t()) / 2.0;
        // shift to PSD territory so round-off clamping cannot bite
        let shift: Array2<f64> = Array2::eye(20) * 25.0;
        let shifted = &sym + &shift;
        let spec = eigen_decompose(shifted.view()).unwrap();
        let diag_sum: f64 = (0..20).map(|i| shifted[[i, i]]).sum();
        assert_relative_eq!(spec.trace, diag_sum, max_relative = 1e-10);
    }

    #[test]
    fn jacobi_agrees_with_sturm_bisection_on_tridiagonals() {
        // independent algorithms, same spectrum
        let t = TridiagonalMatrix {
            diag: vec![5.0, 4.0, 6.0, 3.0],
            offdiag: vec![1.0, 0.5, 0.25],
        };
        let mut dense = Array2::zeros((4, 4));
        for i in 0..4 {
            dense[[i, i]] = t.diag[i];
        }
        for i in 0..3 {
            dense[[i, i + 1]] = t.offdiag[i];
            dense[[i + 1, i]] = t.offdiag[i];
        }
        let mut sturm = tridiagonal_eigenvalues(&t);
        sturm.reverse();
        let jacobi = eigen_decompose(dense.view()).unwrap().eigenvalues;
        for (a, b) in jacobi.iter().zip(sturm.iter()) {
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn non_symmetric_input_is_rejected() {
        let m = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(matches!(
            eigen_decompose(m.view()),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn dense_guard_rejects_large_matrices() {
        let data = DataMatrix::new(Array2::zeros((2, DENSE_DIMENSION_GUARD + 1))).unwrap();
        let op = CenteredOperator::center(data);
        assert!(matches!(
            dense_covariance(&op),
            Err(Error::TooLarge(d, _)) if d == DENSE_DIMENSION_GUARD + 1
        ));
    }

    fn spectrum(values: &[f64]) -> DenseSpectrum {
        DenseSpectrum {
            eigenvalues: values.to_vec(),
            trace: values.iter().sum(),
        }
    }

    #[test]
    fn exact_count_examples() {
        let spec = spectrum(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(exact_count(&spec, 1.5, 3.5).unwrap(), 2);
        assert_eq!(exact_count(&spec, 0.0, 10.0).unwrap(), 4);
        assert_eq!(exact_count(&spec, 0.1, 0.9).unwrap(), 0);
        assert!(exact_count(&spec, 2.0, 2.0).is_err());
    }

    #[test]
    fn exact_count_partitions_sum_to_dimension() {
        let spec = spectrum(&[5.0, 4.0, 2.5, 1.0, 0.25]);
        let edges = [0.0, 0.5, 2.0, 4.5, 5.5];
        let total: usize = edges
            .windows(2)
            .map(|w| exact_count(&spec, w[0], w[1]).unwrap())
            .sum();
        // partition picked so no eigenvalue sits on an internal edge
        assert_eq!(total, 5);
    }

    #[test]
    fn pca_threshold_examples() {
        let spec = spectrum(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(pca_id_threshold(&spec, 0.5).unwrap(), 2);
        assert_eq!(pca_id_threshold(&spec, 0.999999).unwrap(), 4);
        assert!(pca_id_threshold(&spec, 1.0).is_err());
        assert!(pca_id_threshold(&spectrum(&[0.0, 0.0]), 0.5).is_err());
    }

    #[test]
    fn pca_ratio_examples() {
        let spec = spectrum(&[100.0, 1.0, 0.9]);
        assert_eq!(pca_id_ratio(&spec, 10.0).unwrap(), 1);
        let flat = spectrum(&[1.0, 1.0, 1.0]);
        assert!(matches!(pca_id_ratio(&flat, 10.0), Err(Error::NoGapFound)));
        assert!(pca_id_ratio(&spec, 1.0).is_err());
    }
}
