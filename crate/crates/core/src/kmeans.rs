//! Lloyd k-means with a k-means++ style seeded initialization.
//! Deterministic for a given seed; ties break toward the lowest index.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct KmeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    pub iterations: usize,
    /// Within-cluster sum of squares after each assignment pass; Lloyd
    /// guarantees it is non-increasing.
    pub inertia_history: Vec<f64>,
}

fn dist_sq(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(data: ArrayView2<f64>, k: usize, seed: u64, max_iters: usize) -> KmeansResult {
    let n = data.nrows();
    let d = data.ncols();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n, got k={k}, n={n}");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = Array2::zeros((k, d));

    // k-means++: first centre uniform, then D^2 sampling.
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut nearest_sq: Vec<f64> = (0..n)
        .map(|i| dist_sq(data.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = nearest_sq.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, slot) in nearest_sq.iter_mut().enumerate() {
            let ds = dist_sq(data.row(i), centroids.row(c));
            if ds < *slot {
                *slot = ds;
            }
        }
    }

    let mut assignments = vec![0usize; n];
    let mut inertia_history = Vec::new();
    let mut iterations = 0;
    loop {
        // assignment pass
        let mut inertia = 0.0;
        let mut changed = false;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let mut best = 0usize;
            let mut best_d = dist_sq(data.row(i), centroids.row(0));
            for c in 1..k {
                let ds = dist_sq(data.row(i), centroids.row(c));
                if ds < best_d {
                    best_d = ds;
                    best = c;
                }
            }
            inertia += best_d;
            if *slot != best {
                *slot = best;
                changed = true;
            }
        }
        inertia_history.push(inertia);
        if (!changed && iterations > 0) || iterations >= max_iters {
            break;
        }
        iterations += 1;

        // update pass; an empty cluster keeps its previous centroid
        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            let mut row = sums.row_mut(c);
            row += &data.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                let mut row = centroids.row_mut(c);
                row.assign(&sums.row(c));
                row.mapv_inplace(|x| x * inv);
            }
        }
    }

    KmeansResult {
        assignments,
        centroids,
        iterations,
        inertia_history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k_one_puts_everything_in_one_cluster() {
        let data = Array2::from_shape_fn((7, 2), |(i, j)| (i * 2 + j) as f64);
        let res = kmeans(data.view(), 1, 0, 50);
        assert!(res.assignments.iter().all(|&c| c == 0));
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = Array2::from_shape_fn((40, 3), |(i, _)| {
            let centre = if i < 20 { -100.0 } else { 100.0 };
            centre + rng.random::<f64>()
        });
        let res = kmeans(data.view(), 2, 9, 100);
        let first = res.assignments[0];
        assert!(res.assignments[..20].iter().all(|&c| c == first));
        assert!(res.assignments[20..].iter().all(|&c| c != first));
    }

    #[test]
    fn inertia_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = Array2::from_shape_fn((60, 4), |_| rng.random::<f64>() * 10.0);
        let res = kmeans(data.view(), 4, 3, 100);
        for w in res.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = Array2::from_shape_fn((30, 2), |_| rng.random::<f64>());
        let a = kmeans(data.view(), 3, 7, 100);
        let b = kmeans(data.view(), 3, 7, 100);
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
    }
}
