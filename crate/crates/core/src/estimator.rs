//! The interval-sweeping intrinsic-dimension estimator.
//!
//! One run estimates the covariance trace, brackets the spectrum with a few
//! Ritz values, then sweeps the bracket intervals from the top, counting
//! eigenvalues per interval and attributing their variance until the
//! cumulative ratio against the trace reaches the target `t_v`. The
//! acceptable band `t_v +- a_r` decides whether the crossing interval is
//! kept as-is, resolved by linear interpolation, or bisected and re-counted.

use ndarray::Axis;

use crate::chebcount::{chebyshev_moments, ChebyshevMoments, CountResult, SpectrumBounds};
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use crate::linop::{CenteredOperator, DataMatrix};
use crate::probes::{derive_seed, ProbeBudget, ProbeStream, DEFAULT_MAX_PROBES};
use crate::ritz::{ritz_values_seeded, RitzSpectrum, RITZ_DEDUP_REL_TOL};
use crate::trace::{estimate_trace, TraceEstimate};

/// Purpose tags for the per-run sub-streams.
const SEED_TRACE: u64 = 1;
const SEED_COUNT: u64 = 2;
const SEED_RITZ_FALLBACK: u64 = 3;
const SEED_KMEANS: u64 = 4;
const SEED_CLUSTER_BASE: u64 = 32;

/// How counted eigenvalues are attributed variance within an interval
/// (`a_t`: count times the lower edge, the midpoint, or the upper edge).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SummationMode {
    Lower,
    Mean,
    Upper,
}

/// How the interval that crosses the variance target is resolved (`f_t`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalizeMode {
    /// Keep the full crossing interval.
    Direct,
    /// Interpolate assuming eigenvalues spread linearly over the interval.
    Linear,
    /// Bisect and re-count until within the acceptable band or out of depth.
    Refine,
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    /// Chebyshev degree `p`.
    pub degree: usize,
    /// Ritz value count `n_k`.
    pub ritz_count: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Target variance ratio `t_v`.
    pub target_variance: f64,
    /// Acceptable half-band `a_r` around the target.
    pub acceptable_range: f64,
    /// `c_1`: spectral upper bound is `c_1 mu_1`.
    pub lambda_max_factor: f64,
    /// `c_2`: the top interval is `[mu_1, c_2 mu_1]`.
    pub top_interval_factor: f64,
    pub summation: SummationMode,
    pub finalize: FinalizeMode,
    pub seed: u64,
    /// 0 disables clustering, k >= 2 runs the k-means variant.
    pub clusters: usize,
    pub refine_max_depth: usize,
    pub max_probes: usize,
    /// None picks reorthogonalization automatically (on for n_k <= 64).
    pub reorthogonalize: Option<bool>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            degree: 20,
            ritz_count: 8,
            epsilon: 0.2,
            delta: 0.2,
            target_variance: 0.8,
            acceptable_range: 0.02,
            lambda_max_factor: 1.5,
            top_interval_factor: 1.4,
            summation: SummationMode::Mean,
            finalize: FinalizeMode::Linear,
            seed: 0,
            clusters: 0,
            refine_max_depth: 5,
            max_probes: DEFAULT_MAX_PROBES,
            reorthogonalize: None,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.degree == 0 {
            return fail("degree must be >= 1".into());
        }
        if self.ritz_count == 0 {
            return fail("ritz_count must be >= 1".into());
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !self.delta.is_finite() || self.delta <= 0.0 || self.delta >= 1.0 {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !self.target_variance.is_finite()
            || self.target_variance <= 0.0
            || self.target_variance >= 1.0
        {
            return fail(format!(
                "target_variance must lie in (0, 1), got {}",
                self.target_variance
            ));
        }
        if !self.acceptable_range.is_finite() || self.acceptable_range < 0.0 {
            return fail(format!(
                "acceptable_range must be >= 0, got {}",
                self.acceptable_range
            ));
        }
        if self.target_variance + self.acceptable_range >= 1.0 {
            return fail(format!(
                "target_variance + acceptable_range must stay below 1, got {}",
                self.target_variance + self.acceptable_range
            ));
        }
        if !(self.lambda_max_factor > 1.0) {
            return fail(format!(
                "lambda_max_factor must exceed 1, got {}",
                self.lambda_max_factor
            ));
        }
        if !(self.top_interval_factor > 1.0) || self.top_interval_factor > self.lambda_max_factor {
            return fail(format!(
                "top_interval_factor must lie in (1, lambda_max_factor], got {}",
                self.top_interval_factor
            ));
        }
        if self.max_probes == 0 {
            return fail("max_probes must be >= 1".into());
        }
        Ok(())
    }
}

/// One counted interval of the sweep, in eigenvalue units.
#[derive(Clone, Copy, Debug)]
pub struct IntervalRecord {
    pub lower: f64,
    pub upper: f64,
    /// Raw count estimate; negative values contribute nothing.
    pub eta: f64,
    pub alpha_contrib: f64,
    /// Cumulative variance ratio after accounting this interval.
    pub cumulative_ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    WithinAcceptableRange,
    ThresholdCrossedFinalized,
    IntervalsExhausted,
}

/// Full audit trail of one estimation run.
#[derive(Clone, Debug)]
pub struct IdReport {
    pub trace: TraceEstimate,
    pub ritz: RitzSpectrum,
    pub records: Vec<IntervalRecord>,
    pub d_fractional: f64,
    pub d_rounded: u64,
    pub stop_reason: StopReason,
}

/// Result of the k-means variant: one sub-run per cluster, arithmetic mean
/// of the fractional estimates.
#[derive(Clone, Debug)]
pub struct ClusteredIdReport {
    pub runs: Vec<ClusterRun>,
    pub d_fractional: f64,
    pub d_rounded: u64,
}

#[derive(Clone, Debug)]
pub struct ClusterRun {
    pub rows: usize,
    pub report: IdReport,
}

/// Descending interval edges `[c_2 mu_1, mu_1, mu_2, ..., mu_{n_k}]`;
/// consecutive pairs are the count intervals, top pad first.
pub fn interval_edges(ritz_descending: &[f64], c2: f64) -> Result<Vec<f64>> {
    let mu1 = match ritz_descending.first() {
        Some(&v) => v,
        None => return Err(Error::DegenerateSpectrum),
    };
    if !(mu1 > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let mut edges = Vec::with_capacity(ritz_descending.len() + 1);
    edges.push(c2 * mu1);
    edges.extend_from_slice(ritz_descending);
    Ok(edges)
}

/// Variance attributed to an interval holding `eta` eigenvalues.
///
/// When the count rounds to one, the single eigenvalue is the one shadowed
/// by the interval's lower edge, so the lower-mode value applies regardless
/// of the requested mode.
pub fn interval_variance(eta: f64, lower: f64, upper: f64, mode: SummationMode) -> f64 {
    debug_assert!(eta >= 0.0);
    if eta.round() == 1.0 {
        return eta * lower;
    }
    match mode {
        SummationMode::Lower => eta * lower,
        SummationMode::Mean => eta * 0.5 * (lower + upper),
        SummationMode::Upper => eta * upper,
    }
}

/// Linear finalization: the fraction of the crossing interval's variance
/// needed to land exactly on `t_v tau` converts into the same fraction of
/// its count.
pub fn finalize_linear(
    d_before: f64,
    last: &IntervalRecord,
    alpha_before: f64,
    tau: f64,
    t_v: f64,
) -> f64 {
    if last.alpha_contrib <= 0.0 {
        return d_before;
    }
    let f = ((t_v * tau - alpha_before) / last.alpha_contrib).clamp(0.0, 1.0);
    d_before + f * last.eta.max(0.0)
}

/// Attribution rule for an interval of the sweep. The top pad's upper edge
/// `c_2 mu_1` is padding, not a spectral estimate; everything above `mu_1`
/// sits just above it (Ritz values converge from below), so the pad is
/// always attributed at its lower edge.
fn attributed_variance(
    eta: f64,
    lower: f64,
    upper: f64,
    mode: SummationMode,
    is_top_pad: bool,
) -> f64 {
    if is_top_pad {
        interval_variance(eta, lower, upper, SummationMode::Lower)
    } else {
        interval_variance(eta, lower, upper, mode)
    }
}

struct SweepState {
    records: Vec<IntervalRecord>,
    d: f64,
    stop: StopReason,
}

/// Algorithm core: estimate trace and Ritz brackets, sweep the intervals.
pub fn estimate_id(op: &CenteredOperator, cfg: &EstimatorConfig) -> Result<IdReport> {
    cfg.validate()?;
    let d_feat = op.n_features();
    let n = op.n_samples();

    let budget = ProbeBudget::with_cap(cfg.epsilon, cfg.delta, cfg.max_probes)?;
    let trace_stream = ProbeStream::new(derive_seed(cfg.seed, SEED_TRACE), d_feat);
    let trace = estimate_trace(op, budget, &trace_stream)?;
    if !(trace.tau > 0.0) {
        return Err(Error::ZeroVariance);
    }

    // The Krylov grade cannot exceed min(D, N-1); clamp rather than fail so
    // small inputs and cluster sub-runs work with the shared defaults.
    let n_k = cfg.ritz_count.min(d_feat).min(n - 1).max(1);
    let reorth = cfg.reorthogonalize.unwrap_or(n_k <= 64);
    let ritz = ritz_values_seeded(op, n_k, reorth, derive_seed(cfg.seed, SEED_RITZ_FALLBACK))?;
    let dedup = ritz.deduplicated(RITZ_DEDUP_REL_TOL);
    let edges = interval_edges(&dedup, cfg.top_interval_factor)?;
    let bounds = SpectrumBounds::new(0.0, cfg.lambda_max_factor * dedup[0])?;

    let count_stream = ProbeStream::new(derive_seed(cfg.seed, SEED_COUNT), d_feat);
    let moments = chebyshev_moments(op, bounds, cfg.degree, budget.n_probes(), &count_stream)?;

    let state = sweep(&moments, cfg, trace.tau, &edges)?;
    let d_fractional = state.d.max(0.0);
    Ok(IdReport {
        trace,
        ritz,
        records: state.records,
        d_fractional,
        d_rounded: d_fractional.round() as u64,
        stop_reason: state.stop,
    })
}

fn sweep(
    moments: &ChebyshevMoments,
    cfg: &EstimatorConfig,
    tau: f64,
    edges: &[f64],
) -> Result<SweepState> {
    let t_v = cfg.target_variance;
    let a_r = cfg.acceptable_range;
    let mut records = Vec::new();
    let mut alpha = 0.0;
    let mut d = 0.0;
    let mut stop = StopReason::IntervalsExhausted;

    for i in 0..edges.len().saturating_sub(1) {
        let upper = edges[i];
        let lower = edges[i + 1];
        let is_pad = i == 0;
        let count = moments.count_in(lower, upper)?;
        let eta = count.eta_clamped;
        let contrib = attributed_variance(eta, lower, upper, cfg.summation, is_pad);
        let (alpha_before, d_before) = (alpha, d);
        alpha += contrib;
        d += eta;
        let ratio = alpha / tau;
        let record = IntervalRecord {
            lower,
            upper,
            eta: count.eta,
            alpha_contrib: contrib,
            cumulative_ratio: ratio,
        };

        if ratio > t_v - a_r {
            if ratio >= t_v + a_r {
                // crossed past the band: finalize
                match cfg.finalize {
                    FinalizeMode::Direct => {
                        records.push(record);
                        stop = StopReason::ThresholdCrossedFinalized;
                    }
                    FinalizeMode::Linear => {
                        d = finalize_linear(d_before, &record, alpha_before, tau, t_v);
                        records.push(record);
                        stop = StopReason::ThresholdCrossedFinalized;
                    }
                    FinalizeMode::Refine => {
                        let base_mode = if is_pad {
                            SummationMode::Lower
                        } else {
                            cfg.summation
                        };
                        let (d_ref, stop_ref) = refine_descend(
                            moments,
                            cfg,
                            tau,
                            base_mode,
                            lower,
                            upper,
                            count,
                            contrib,
                            alpha_before,
                            d_before,
                            cfg.refine_max_depth,
                            &mut records,
                        )?;
                        d = d_ref;
                        stop = stop_ref;
                    }
                }
            } else {
                // landed inside the acceptable band: keep d as-is
                records.push(record);
                stop = StopReason::WithinAcceptableRange;
            }
            return Ok(SweepState { records, d, stop });
        }
        records.push(record);
    }
    Ok(SweepState { records, d, stop })
}

/// Bisects the crossing interval, re-counts both halves on the cached
/// moments, and descends into the half containing the threshold. Stops when
/// the accumulated ratio lands in the acceptable band or the depth runs out,
/// then falls back to linear interpolation on the remaining sub-interval.
#[allow(clippy::too_many_arguments)]
fn refine_descend(
    moments: &ChebyshevMoments,
    cfg: &EstimatorConfig,
    tau: f64,
    mode: SummationMode,
    lower: f64,
    upper: f64,
    count: CountResult,
    contrib: f64,
    alpha_before: f64,
    d_before: f64,
    depth: usize,
    records: &mut Vec<IntervalRecord>,
) -> Result<(f64, StopReason)> {
    let t_v = cfg.target_variance;
    let a_r = cfg.acceptable_range;
    let mid = 0.5 * (lower + upper);

    if depth == 0 || contrib <= 0.0 || !(lower < mid && mid < upper) {
        let record = IntervalRecord {
            lower,
            upper,
            eta: count.eta,
            alpha_contrib: contrib,
            cumulative_ratio: (alpha_before + contrib) / tau,
        };
        let d = finalize_linear(d_before, &record, alpha_before, tau, t_v);
        records.push(record);
        return Ok((d, StopReason::ThresholdCrossedFinalized));
    }

    let upper_half = moments.count_in(mid, upper)?;
    let lower_half = moments.count_in(lower, mid)?;

    let eta_u = upper_half.eta_clamped;
    let contrib_u = interval_variance(eta_u, mid, upper, mode);
    let ratio_u = (alpha_before + contrib_u) / tau;
    if ratio_u >= t_v + a_r {
        // threshold sits inside the upper half
        return refine_descend(
            moments,
            cfg,
            tau,
            mode,
            mid,
            upper,
            upper_half,
            contrib_u,
            alpha_before,
            d_before,
            depth - 1,
            records,
        );
    }
    if ratio_u > t_v - a_r {
        records.push(IntervalRecord {
            lower: mid,
            upper,
            eta: upper_half.eta,
            alpha_contrib: contrib_u,
            cumulative_ratio: ratio_u,
        });
        return Ok((d_before + eta_u, StopReason::WithinAcceptableRange));
    }

    // the upper half is fully below the band: commit it, descend lower
    records.push(IntervalRecord {
        lower: mid,
        upper,
        eta: upper_half.eta,
        alpha_contrib: contrib_u,
        cumulative_ratio: ratio_u,
    });
    let alpha_mid = alpha_before + contrib_u;
    let d_mid = d_before + eta_u;

    let eta_l = lower_half.eta_clamped;
    let contrib_l = interval_variance(eta_l, lower, mid, mode);
    let ratio_l = (alpha_mid + contrib_l) / tau;
    if ratio_l >= t_v + a_r {
        return refine_descend(
            moments,
            cfg,
            tau,
            mode,
            lower,
            mid,
            lower_half,
            contrib_l,
            alpha_mid,
            d_mid,
            depth - 1,
            records,
        );
    }
    let record = IntervalRecord {
        lower,
        upper: mid,
        eta: lower_half.eta,
        alpha_contrib: contrib_l,
        cumulative_ratio: ratio_l,
    };
    if ratio_l > t_v - a_r {
        records.push(record);
        return Ok((d_mid + eta_l, StopReason::WithinAcceptableRange));
    }
    // Half counts fell just short of the parent crossing (split noise):
    // interpolate on the lower half toward the target.
    let d = finalize_linear(d_mid, &record, alpha_mid, tau, t_v);
    records.push(record);
    Ok((d, StopReason::ThresholdCrossedFinalized))
}

/// The k-means variant: cluster the rows, center and estimate each cluster
/// independently, report the arithmetic mean.
pub fn estimate_id_clustered(
    data: &DataMatrix,
    cfg: &EstimatorConfig,
) -> Result<ClusteredIdReport> {
    cfg.validate()?;
    let k = cfg.clusters;
    if k < 2 {
        return Err(Error::ConfigInvalid(format!(
            "clustered estimation needs clusters >= 2, got {k}"
        )));
    }
    if data.n_samples() < 2 * k {
        return Err(Error::ConfigInvalid(format!(
            "need at least 2 * clusters = {} samples, got {}",
            2 * k,
            data.n_samples()
        )));
    }

    let result = kmeans(data.values(), k, derive_seed(cfg.seed, SEED_KMEANS), 100);
    let groups = usable_groups(data, &result.assignments, k)?;

    let mut runs = Vec::with_capacity(groups.len());
    for (idx, rows) in groups.iter().enumerate() {
        let sub = data.select_rows(rows)?;
        let mut sub_cfg = cfg.clone();
        sub_cfg.clusters = 0;
        sub_cfg.ritz_count = cfg
            .ritz_count
            .min(sub.n_features())
            .min(sub.n_samples() - 1)
            .max(1);
        sub_cfg.seed = derive_seed(cfg.seed, SEED_CLUSTER_BASE + idx as u64);
        let op = CenteredOperator::center(sub);
        let report = estimate_id(&op, &sub_cfg)?;
        runs.push(ClusterRun {
            rows: rows.len(),
            report,
        });
    }

    let d_fractional = runs.iter().map(|r| r.report.d_fractional).sum::<f64>() / runs.len() as f64;
    Ok(ClusteredIdReport {
        runs,
        d_fractional,
        d_rounded: d_fractional.round() as u64,
    })
}

/// Groups rows by cluster, merging clusters smaller than `max(2, D/10)`
/// into the nearest surviving cluster by centroid distance.
fn usable_groups(data: &DataMatrix, assignments: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let d = data.n_features();
    let min_size = 2.max(d / 10);

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (row, &c) in assignments.iter().enumerate() {
        groups[c].push(row);
    }
    groups.retain(|g| !g.is_empty());

    let centroid = |rows: &[usize]| -> Vec<f64> {
        let mut c = vec![0.0; d];
        for &r in rows {
            for (j, v) in data.values().index_axis(Axis(0), r).iter().enumerate() {
                c[j] += v;
            }
        }
        for v in &mut c {
            *v /= rows.len() as f64;
        }
        c
    };

    loop {
        if groups.len() <= 1 {
            break;
        }
        let small = groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.len() < min_size)
            .min_by_key(|(_, g)| g.len())
            .map(|(i, _)| i);
        let Some(small_idx) = small else { break };
        let small_centroid = centroid(&groups[small_idx]);
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, g) in groups.iter().enumerate() {
            if i == small_idx {
                continue;
            }
            let c = centroid(g);
            let dist: f64 = c
                .iter()
                .zip(small_centroid.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist < best_d {
                best_d = dist;
                best = Some(i);
            }
        }
        let target = best.expect("at least two groups");
        let moved = groups.remove(small_idx);
        let target = if target > small_idx {
            target - 1
        } else {
            target
        };
        groups[target].extend(moved);
        groups[target].sort_unstable();
    }

    if groups.len() < 2 {
        return Err(Error::ClusteringDegenerate);
    }
    Ok(groups)
}
