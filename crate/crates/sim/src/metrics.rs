//! Per-task rows and run-level aggregates, plus the CSV/JSON emitters.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::engine::{TaskOutcome, TaskRecord};
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Success,
    Failure,
    /// Still in flight when the run ended.
    Censored,
}

impl OutcomeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeKind::Success => "success",
            OutcomeKind::Failure => "failure",
            OutcomeKind::Censored => "censored",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskRow {
    pub task_id: u64,
    pub arrival_s: f64,
    /// Fastest succeeding replica's round trip; None unless the task
    /// succeeded.
    pub latency_s: Option<f64>,
    /// Realized unreliability; None while censored.
    pub unreliability: Option<f64>,
    /// Scheduler's estimate at dispatch.
    pub predicted_unreliability: f64,
    pub redundancy: usize,
    pub outcome: OutcomeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scheduler: String,
    pub seed: u64,
    pub duration_s: f64,
    pub tasks_total: usize,
    pub tasks_succeeded: usize,
    pub tasks_failed: usize,
    pub tasks_censored: usize,
    /// Aggregates over succeeded tasks; None when there are none.
    pub mean_latency_s: Option<f64>,
    pub p50_latency_s: Option<f64>,
    pub p80_latency_s: Option<f64>,
    pub p95_latency_s: Option<f64>,
    /// Fraction of completed tasks whose realized unreliability stayed at or
    /// under the configured threshold.
    pub frac_under_threshold: f64,
    pub mean_redundancy: f64,
    pub mean_unreliability: Option<f64>,
    pub mean_predicted_unreliability: Option<f64>,
    #[serde(skip)]
    pub rows: Vec<TaskRow>,
}

/// Nearest-rank percentile of an already sorted sample.
fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

pub fn build_report(config: &ScenarioConfig, tasks: &BTreeMap<u64, TaskRecord>) -> MetricsReport {
    let mut rows = Vec::with_capacity(tasks.len());
    for record in tasks.values() {
        let (outcome, latency) = match record.outcome {
            Some(TaskOutcome::Success { latency }) => (OutcomeKind::Success, Some(latency)),
            Some(TaskOutcome::Failure) => (OutcomeKind::Failure, None),
            None => (OutcomeKind::Censored, None),
        };
        rows.push(TaskRow {
            task_id: record.spec.id,
            arrival_s: record.spec.arrival_time,
            latency_s: latency,
            unreliability: record.realized_unreliability,
            predicted_unreliability: record.predicted_unreliability,
            redundancy: record.replicas.len(),
            outcome,
        });
    }

    let mut latencies: Vec<f64> = rows.iter().filter_map(|r| r.latency_s).collect();
    latencies.sort_by(|a, b| a.total_cmp(b));
    let completed: Vec<f64> = rows.iter().filter_map(|r| r.unreliability).collect();
    let under = completed.iter().filter(|&&u| u <= config.fail_threshold).count();
    let predicted: Vec<f64> = rows.iter().map(|r| r.predicted_unreliability).collect();

    let tasks_succeeded = rows.iter().filter(|r| r.outcome == OutcomeKind::Success).count();
    let tasks_failed = rows.iter().filter(|r| r.outcome == OutcomeKind::Failure).count();
    let tasks_censored = rows.iter().filter(|r| r.outcome == OutcomeKind::Censored).count();
    let mean_redundancy = if rows.is_empty() {
        0.0
    } else {
        rows.iter().map(|r| r.redundancy as f64).sum::<f64>() / rows.len() as f64
    };

    MetricsReport {
        scheduler: config.scheduler.as_str().to_string(),
        seed: config.seed,
        duration_s: config.duration,
        tasks_total: rows.len(),
        tasks_succeeded,
        tasks_failed,
        tasks_censored,
        mean_latency_s: mean(&latencies),
        p50_latency_s: percentile(&latencies, 0.50),
        p80_latency_s: percentile(&latencies, 0.80),
        p95_latency_s: percentile(&latencies, 0.95),
        frac_under_threshold: if completed.is_empty() {
            0.0
        } else {
            under as f64 / completed.len() as f64
        },
        mean_redundancy,
        mean_unreliability: mean(&completed),
        mean_predicted_unreliability: mean(&predicted),
        rows,
    }
}

pub const TASKS_CSV_HEADER: &str = "task_id,arrival_s,latency_s,unreliability,redundancy,outcome";

/// Renders the per-task table. Missing latencies and unreliabilities (failed
/// and censored tasks) become empty cells, never placeholder numbers.
pub fn tasks_csv(rows: &[TaskRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(TASKS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let latency = row.latency_s.map(|v| format!("{v:.6}")).unwrap_or_default();
        let unreliability = row.unreliability.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.6},{},{},{},{}\n",
            row.task_id, row.arrival_s, latency, unreliability, row.redundancy,
            row.outcome.as_str(),
        ));
    }
    out
}

/// Aggregate summary as pretty JSON, stable field order.
pub fn summary_json(report: &MetricsReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}
