//! Rademacher probe vectors and the (epsilon, delta) -> n_v budget shared by
//! the trace and count estimators.
//!
//! Probes are generated from a counter-based scheme: probe k is a pure
//! function of (seed, k), so blocks can be produced in any order or in
//! parallel without changing a single bit of the output.

use ndarray::{Array1, Array2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default cap on the derived probe count; tiny epsilon makes the budget
/// formula explode.
pub const DEFAULT_MAX_PROBES: usize = 100_000;

/// Probes are evaluated in fixed-size blocks; the reduction over blocks runs
/// in index order, so results do not depend on the thread count.
pub const PROBE_BLOCK: usize = 64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a user seed and a purpose tag, so the
/// trace, count, and clustering streams stay disjoint under one seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Probe budget `n_v = ceil(2 (2 + (8 sqrt(2) / 3) eps) ln(2 / delta) / eps^2)`,
/// the number of Rademacher probes guaranteeing relative error below `eps`
/// with probability `1 - delta`. The logarithm is natural.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeBudget {
    epsilon: f64,
    delta: f64,
    n_v: usize,
}

impl ProbeBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        Self::with_cap(epsilon, delta, DEFAULT_MAX_PROBES)
    }

    pub fn with_cap(epsilon: f64, delta: f64, cap: usize) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("must be a positive finite number, got {epsilon}"),
            });
        }
        if !delta.is_finite() || delta <= 0.0 || delta >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must lie strictly inside (0, 1), got {delta}"),
            });
        }
        let raw = 2.0 * (2.0 + (8.0 * 2.0_f64.sqrt() / 3.0) * epsilon) * (2.0 / delta).ln()
            / (epsilon * epsilon);
        let mut n_v = raw.ceil().max(1.0) as usize;
        let cap = cap.max(1);
        if n_v > cap {
            log::warn!(
                "probe budget {n_v} for (eps={epsilon}, delta={delta}) exceeds cap {cap}; clamping"
            );
            n_v = cap;
        }
        Ok(Self {
            epsilon,
            delta,
            n_v,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_probes(&self) -> usize {
        self.n_v
    }
}

/// Deterministic stream of Rademacher vectors in a fixed dimension.
#[derive(Clone, Copy, Debug)]
pub struct ProbeStream {
    seed: u64,
    dimension: usize,
}

impl ProbeStream {
    pub fn new(seed: u64, dimension: usize) -> Self {
        Self { seed, dimension }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// The k-th probe; entries are i.i.d. +-1, a pure function of (seed, k).
    pub fn probe(&self, k: u64) -> Array1<f64> {
        let mut out = Array1::zeros(self.dimension);
        self.fill_column(k, out.as_slice_mut().expect("contiguous"));
        out
    }

    /// Fills `out` (dimension x m) with probes `first .. first + m` as columns.
    pub fn fill_block(&self, first: u64, out: &mut Array2<f64>) {
        assert_eq!(out.nrows(), self.dimension, "block row count");
        let mut buf = vec![0.0; self.dimension];
        for (offset, mut col) in out.columns_mut().into_iter().enumerate() {
            let k = first + offset as u64;
            match col.as_slice_mut() {
                Some(slice) => self.fill_column(k, slice),
                None => {
                    self.fill_column(k, &mut buf);
                    for (dst, src) in col.iter_mut().zip(buf.iter()) {
                        *dst = *src;
                    }
                }
            }
        }
    }

    fn fill_column(&self, k: u64, out: &mut [f64]) {
        let probe_seed = splitmix64(self.seed ^ splitmix64(k.wrapping_add(1)));
        let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
        let mut i = 0;
        while i < out.len() {
            let mut word = rng.next_u64();
            let take = (out.len() - i).min(64);
            for _ in 0..take {
                out[i] = if word & 1 == 1 { 1.0 } else { -1.0 };
                word >>= 1;
                i += 1;
            }
        }
    }
}
