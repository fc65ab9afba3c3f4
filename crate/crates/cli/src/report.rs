//! JSON report emitted by `ritzid estimate` and `ritzid oracle`. Struct
//! field order fixes the key order, so identical runs serialize to
//! identical bytes apart from `wall_time_ms`.

use serde::{Deserialize, Serialize};

use ritzid_core::{ClusteredIdReport, IdReport, IntervalRecord, StopReason};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub tv: f64,
    pub ar: f64,
    pub p: usize,
    pub nk: usize,
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
    pub at: String,
    pub ft: String,
    pub clusters: usize,
    pub pre_centered: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub lower: f64,
    pub upper: f64,
    pub eta: f64,
    pub alpha_contrib: f64,
    pub cumulative_ratio: f64,
}

impl From<&IntervalRecord> for IntervalEntry {
    fn from(r: &IntervalRecord) -> Self {
        Self {
            lower: r.lower,
            upper: r.upper,
            eta: r.eta,
            alpha_contrib: r.alpha_contrib,
            cumulative_ratio: r.cumulative_ratio,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSection {
    pub trace: f64,
    pub theta: f64,
    pub pca_id: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClusterSection {
    pub rows: usize,
    pub tau: f64,
    pub ritz_values: Vec<f64>,
    pub d_fractional: f64,
    pub d_rounded: u64,
    pub stop_reason: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReportFile {
    pub config: ConfigEcho,
    pub data: DataShape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ritz_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<IntervalEntry>>,
    pub d_fractional: f64,
    pub d_rounded: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_cluster: Option<Vec<ClusterSection>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    pub seed: u64,
    pub wall_time_ms: u64,
}

pub fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::WithinAcceptableRange => "within_acceptable_range",
        StopReason::ThresholdCrossedFinalized => "threshold_crossed_finalized",
        StopReason::IntervalsExhausted => "intervals_exhausted",
    }
}

pub fn single_run_sections(
    report: &IdReport,
) -> (f64, usize, Vec<f64>, Vec<IntervalEntry>, String) {
    (
        report.trace.tau,
        report.trace.n_v_used,
        report.ritz.values.clone(),
        report.records.iter().map(IntervalEntry::from).collect(),
        stop_reason_str(report.stop_reason).to_string(),
    )
}

pub fn cluster_sections(report: &ClusteredIdReport) -> Vec<ClusterSection> {
    report
        .runs
        .iter()
        .map(|run| ClusterSection {
            rows: run.rows,
            tau: run.report.trace.tau,
            ritz_values: run.report.ritz.values.clone(),
            d_fractional: run.report.d_fractional,
            d_rounded: run.report.d_rounded,
            stop_reason: stop_reason_str(run.report.stop_reason).to_string(),
        })
        .collect()
}
