//! Shared fixtures for the pipeline benchmarks.

use ritzid_core::{make_low_rank, CenteredOperator, LowRankSpec};

/// Centered low-rank fixture with the bell-shaped singular profile.
pub fn low_rank_operator(n: usize, d: usize, rank: usize, seed: u64) -> CenteredOperator {
    let spec = LowRankSpec {
        n_samples: n,
        n_features: d,
        effective_rank: rank,
        tail_strength: 0.05,
        seed,
    };
    CenteredOperator::center(make_low_rank(&spec).expect("valid spec"))
}
