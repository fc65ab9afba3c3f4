//! Seeded synthetic data generators: a low-rank matrix with a bell-shaped
//! singular profile, uniform points on an embedded sphere, and Gaussian data
//! on a random affine subspace. All deterministic per seed.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linop::DataMatrix;

#[derive(Clone, Copy, Debug)]
pub struct LowRankSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub effective_rank: usize,
    pub tail_strength: f64,
    pub seed: u64,
}

/// Bell-shaped singular profile
/// `s_i = (1 - ts) exp(-(i/r)^2) + ts exp(-0.1 i/r)`.
pub fn singular_value_profile(index: usize, effective_rank: usize, tail_strength: f64) -> f64 {
    let i = index as f64;
    let r = effective_rank as f64;
    (1.0 - tail_strength) * (-(i / r) * (i / r)).exp() + tail_strength * (-0.1 * i / r).exp()
}

/// `X = U diag(s) V^T` with random orthonormal factors and the bell-shaped
/// profile above.
pub fn make_low_rank(spec: &LowRankSpec) -> Result<DataMatrix> {
    let n = spec.n_samples;
    let d = spec.n_features;
    let r = spec.effective_rank;
    if n < 2 || d < 1 {
        return Err(Error::InvalidSpec(format!(
            "need n_samples >= 2 and n_features >= 1, got {n} x {d}"
        )));
    }
    if r < 1 || r > n.min(d) {
        return Err(Error::InvalidSpec(format!(
            "effective_rank must lie in [1, min(N, D)] = [1, {}], got {r}",
            n.min(d)
        )));
    }
    if !(0.0..=1.0).contains(&spec.tail_strength) {
        return Err(Error::InvalidSpec(format!(
            "tail_strength must lie in [0, 1], got {}",
            spec.tail_strength
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = n.min(d);
    let u = orthonormal_columns(n, k, &mut rng);
    let v = orthonormal_columns(d, k, &mut rng);
    let s = Array1::from_shape_fn(k, |i| singular_value_profile(i, r, spec.tail_strength));

    let mut us = u;
    for (mut col, &sv) in us.columns_mut().into_iter().zip(s.iter()) {
        col.mapv_inplace(|x| x * sv);
    }
    let x = us.dot(&v.t());
    DataMatrix::new(x)
}

/// Uniform points on the d-sphere embedded in `R^ambient` and randomly
/// rotated; rows have unit norm.
pub fn make_sphere(n: usize, d: usize, ambient: usize, seed: u64) -> Result<DataMatrix> {
    if n < 2 || d < 1 || d + 1 > ambient {
        return Err(Error::InvalidSpec(format!(
            "need n >= 2, d >= 1 and d + 1 <= ambient, got n={n}, d={d}, ambient={ambient}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Array2::zeros((n, ambient));
    for mut row in points.rows_mut() {
        loop {
            let mut norm_sq = 0.0;
            for j in 0..=d {
                let g: f64 = rng.sample(StandardNormal);
                row[j] = g;
                norm_sq += g * g;
            }
            if norm_sq > 1e-24 {
                let inv = 1.0 / norm_sq.sqrt();
                for j in 0..=d {
                    row[j] *= inv;
                }
                break;
            }
        }
    }
    let q = orthonormal_columns(ambient, ambient, &mut rng);
    DataMatrix::new(points.dot(&q.t()))
}

/// Gaussian cloud on a random d-dimensional affine subspace of `R^ambient`
/// plus isotropic noise of the given sigma.
pub fn make_affine(
    n: usize,
    d: usize,
    ambient: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<DataMatrix> {
    if n < 2 || d < 1 || d > ambient {
        return Err(Error::InvalidSpec(format!(
            "need n >= 2 and 1 <= d <= ambient, got n={n}, d={d}, ambient={ambient}"
        )));
    }
    if !noise_sigma.is_finite() || noise_sigma < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "noise_sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = orthonormal_columns(ambient, d, &mut rng); // ambient x d
    let offset = Array1::from_shape_fn(ambient, |_| {
        let g: f64 = rng.sample(StandardNormal);
        2.0 * g
    });
    let latent = Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal));
    let mut x = latent.dot(&basis.t());
    x += &offset;
    if noise_sigma > 0.0 {
        let noise = Array2::from_shape_fn((n, ambient), |_| rng.sample::<f64, _>(StandardNormal));
        x.zip_mut_with(&noise, |v, &e| *v += noise_sigma * e);
    }
    DataMatrix::new(x)
}

/// Orthonormal columns from a Gaussian draw via modified Gram-Schmidt with a
/// second projection pass.
fn orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    assert!(
        cols <= rows,
        "cannot orthonormalize {cols} columns in R^{rows}"
    );
    let mut m = Array2::from_shape_fn((rows, cols), |_| rng.sample::<f64, _>(StandardNormal));
    for j in 0..cols {
        let (done, mut rest) = m.view_mut().split_at(Axis(1), j);
        let mut col = rest.column_mut(0);
        for _pass in 0..2 {
            for i in 0..j {
                let prev = done.column(i);
                let proj = prev.dot(&col);
                if proj != 0.0 {
                    col.scaled_add(-proj, &prev);
                }
            }
        }
        let norm = col.dot(&col).sqrt();
        if norm > 1e-12 {
            col.mapv_inplace(|x| x / norm);
        } else {
            // essentially impossible for a Gaussian draw; restart the column
            for x in col.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let norm = col.dot(&col).sqrt();
            col.mapv_inplace(|x| x / norm);
        }
    }
    m
}
