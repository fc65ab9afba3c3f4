//! Implicit column-centered view of a dense data matrix.
//!
//! The covariance matrix `C = X_c^T X_c / (N - 1)` of centered data is never
//! formed. Everything downstream touches the data through the two rectangular
//! products `X_c v` and `X_c^T r`, each O(ND). Centering is applied on the
//! fly from the stored column means, so the original matrix is the only
//! N x D allocation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Dense N x D sample matrix; rows are samples, columns are features.
///
/// Construction validates N >= 2, D >= 1 and rejects NaN/Inf entries, so a
/// `DataMatrix` can always be centered.
#[derive(Clone, Debug)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n < 2 {
            return Err(Error::TooFewSamples(n));
        }
        if d < 1 {
            return Err(Error::InvalidParameter {
                name: "n_features",
                reason: "need at least one feature column".into(),
            });
        }
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self { values })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Copy of the selected rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let sub = self.values.select(Axis(0), rows);
        Self::new(sub)
    }
}

/// The centered operator `X_c = X - 1 mu^T`, stored as `X` plus the column
/// means `mu`. Immutable after construction; all products are pure.
#[derive(Clone, Debug)]
pub struct CenteredOperator {
    data: DataMatrix,
    col_means: Array1<f64>,
}

impl CenteredOperator {
    /// Centers by the column means of `data`.
    pub fn center(data: DataMatrix) -> Self {
        let col_means = data
            .values
            .mean_axis(Axis(0))
            .expect("DataMatrix guarantees N >= 2");
        Self { data, col_means }
    }

    /// Treats `data` as already centered (`mu = 0`). Products then reduce to
    /// plain `X v` / `X^T r`, which keeps exact-arithmetic fixtures exact.
    pub fn pre_centered(data: DataMatrix) -> Self {
        let col_means = Array1::zeros(data.n_features());
        Self { data, col_means }
    }

    pub fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.data.n_features()
    }

    pub fn col_means(&self) -> ArrayView1<'_, f64> {
        self.col_means.view()
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    /// `X_c v = X v - (mu . v) 1`, length N.
    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        let d = self.n_features();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        let mut y = self.data.values.dot(&v);
        let shift = self.col_means.dot(&v);
        if shift != 0.0 {
            y -= shift;
        }
        Ok(y)
    }

    /// `X_c^T r = X^T r - mu (sum r)`, length D.
    pub fn apply_transpose(&self, r: ArrayView1<f64>) -> Result<Array1<f64>> {
        let n = self.n_samples();
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        let mut t = self.data.values.t().dot(&r);
        let total = r.sum();
        if total != 0.0 {
            t.scaled_add(-total, &self.col_means);
        }
        Ok(t)
    }

    /// `C w = X_c^T (X_c w) / (N - 1)` via two products.
    pub fn covariance_apply(&self, w: ArrayView1<f64>) -> Result<Array1<f64>> {
        let h = self.apply(w)?;
        let mut t = self.apply_transpose(h.view())?;
        let nm1 = (self.n_samples() - 1) as f64;
        t.mapv_inplace(|x| x / nm1);
        Ok(t)
    }

    /// Block form of [`apply`](Self::apply): `V` is D x m with one vector per
    /// column, the result is N x m.
    pub fn apply_block(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        let d = self.n_features();
        if v.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.nrows(),
            });
        }
        let mut y = self.data.values.dot(&v);
        let shift = self.col_means.dot(&v);
        if shift.iter().any(|&s| s != 0.0) {
            y -= &shift;
        }
        Ok(y)
    }

    /// Block form of [`apply_transpose`](Self::apply_transpose).
    pub fn apply_transpose_block(&self, r: ArrayView2<f64>) -> Result<Array2<f64>> {
        let n = self.n_samples();
        if r.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.nrows(),
            });
        }
        let mut t = self.data.values.t().dot(&r);
        let totals = r.sum_axis(Axis(0));
        if totals.iter().any(|&s| s != 0.0) {
            for (mut row, &mu) in t.rows_mut().into_iter().zip(self.col_means.iter()) {
                row.scaled_add(-mu, &totals);
            }
        }
        Ok(t)
    }

    /// `X_c^T (X_c W)` without the `1/(N-1)` factor; the Chebyshev recurrence
    /// folds that factor into its own scaling.
    pub fn gram_block(&self, w: ArrayView2<f64>) -> Result<Array2<f64>> {
        let h = self.apply_block(w)?;
        self.apply_transpose_block(h.view())
    }

    /// Frobenius norm of the centered matrix, computed without materializing
    /// it. Used to detect degenerate right-hand sides.
    pub fn centered_frobenius(&self) -> f64 {
        let mut acc = 0.0;
        for row in self.data.values.rows() {
            for (x, mu) in row.iter().zip(self.col_means.iter()) {
                let c = x - mu;
                acc += c * c;
            }
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>() * 4.0 - 2.0)
    }

    /// Test-only materialization of X - 1 mu^T.
    fn materialize(op: &CenteredOperator) -> Array2<f64> {
        let mut xc = op.data().values().to_owned();
        for mut row in xc.rows_mut() {
            row.zip_mut_with(&op.col_means(), |x, mu| *x -= mu);
        }
        xc
    }

    #[test]
    fn column_means_by_hand() {
        let data = DataMatrix::new(array![[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let op = CenteredOperator::center(data);
        assert_eq!(op.col_means().to_vec(), vec![2.0, 3.0]);
    }

    #[test]
    fn zero_matrix_has_zero_means_and_zero_products() {
        let data = DataMatrix::new(Array2::zeros((4, 3))).unwrap();
        let op = CenteredOperator::center(data);
        assert!(op.col_means().iter().all(|&m| m == 0.0));
        let v = array![1.0, -2.0, 3.0];
        assert!(op.apply(v.view()).unwrap().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn rejects_non_finite_and_too_few_samples() {
        let err = DataMatrix::new(array![[1.0, f64::NAN], [0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        let err = DataMatrix::new(Array2::zeros((1, 3))).unwrap_err();
        assert!(matches!(err, Error::TooFewSamples(1)));
    }

    #[test]
    fn centered_columns_sum_to_zero() {
        let data = DataMatrix::new(random_matrix(50, 20, 1)).unwrap();
        let maxabs = data
            .values()
            .iter()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let op = CenteredOperator::center(data);
        let xc = materialize(&op);
        let bound = 1e-9 * 50.0 * maxabs.max(1.0);
        for col in xc.columns() {
            assert!(col.sum().abs() < bound);
        }
    }

    #[test]
    fn apply_matches_materialized_centering() {
        let data = DataMatrix::new(random_matrix(30, 10, 2)).unwrap();
        let op = CenteredOperator::center(data);
        let xc = materialize(&op);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let v = Array1::from_shape_fn(10, |_| rng.random::<f64>() - 0.5);
            let got = op.apply(v.view()).unwrap();
            let want = xc.dot(&v);
            let scale = want.iter().fold(1e-30f64, |a, &x| a.max(x.abs()));
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() < 1e-12 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn apply_transpose_matches_materialized_centering() {
        let data = DataMatrix::new(random_matrix(30, 10, 4)).unwrap();
        let op = CenteredOperator::center(data);
        let xc = materialize(&op);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = Array1::from_shape_fn(30, |_| rng.random::<f64>() - 0.5);
        let got = op.apply_transpose(r.view()).unwrap();
        let want = xc.t().dot(&r);
        for (g, w) in got.iter().zip(want.iter()) {
            assert_relative_eq!(g, w, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_sum_residual_skips_centering_term_exactly() {
        let data = DataMatrix::new(random_matrix(6, 4, 6)).unwrap();
        let op = CenteredOperator::center(data.clone());
        let r = array![1.0, -1.0, 2.0, -2.0, 0.5, -0.5];
        assert_eq!(r.sum(), 0.0);
        let got = op.apply_transpose(r.view()).unwrap();
        let want = data.values().t().dot(&r);
        assert_eq!(got, want);
    }

    #[test]
    fn pre_centered_identity_on_columns() {
        // X_c = [[1,0],[0,2],[0,0]] treated as already centered.
        let data = DataMatrix::new(array![[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap();
        let op = CenteredOperator::pre_centered(data);
        let e1 = array![1.0, 0.0];
        assert_eq!(op.apply(e1.view()).unwrap(), array![1.0, 0.0, 0.0]);
        // C = diag(0.5, 2): covariance_apply(e2) = [0, 2]
        let e2 = array![0.0, 1.0];
        assert_eq!(op.covariance_apply(e2.view()).unwrap(), array![0.0, 2.0]);
    }

    #[test]
    fn covariance_apply_matches_dense_oracle() {
        let data = DataMatrix::new(random_matrix(40, 8, 7)).unwrap();
        let op = CenteredOperator::center(data);
        let xc = materialize(&op);
        let c = xc.t().dot(&xc) / 39.0;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = Array1::from_shape_fn(8, |_| rng.random::<f64>() - 0.5);
        let got = op.covariance_apply(w.view()).unwrap();
        let want = c.dot(&w);
        for (g, w) in got.iter().zip(want.iter()) {
            assert_relative_eq!(g, w, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn block_ops_agree_with_vector_ops() {
        let data = DataMatrix::new(random_matrix(25, 6, 9)).unwrap();
        let op = CenteredOperator::center(data);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = Array2::from_shape_fn((6, 3), |_| rng.random::<f64>() - 0.5);
        let block = op.apply_block(v.view()).unwrap();
        for (k, col) in v.columns().into_iter().enumerate() {
            let single = op.apply(col).unwrap();
            for (a, b) in block.column(k).iter().zip(single.iter()) {
                assert_relative_eq!(a, b, max_relative = 1e-13, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let data = DataMatrix::new(random_matrix(5, 3, 11)).unwrap();
        let op = CenteredOperator::center(data);
        let bad = Array1::zeros(4);
        assert!(matches!(
            op.apply(bad.view()),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 4
            })
        ));
        assert!(matches!(
            op.apply_transpose(bad.view()),
            Err(Error::DimensionMismatch {
                expected: 5,
                got: 4
            })
        ));
    }
}
