//! Slot-based simulation of crowdsourced task offloading across a small
//! vehicle fleet: Poisson task arrivals, scheduler dispatch, per-slot
//! capacity splits, an analytic shared channel, constant-velocity mobility
//! with coverage departures, and per-replica success draws.

pub mod engine;
pub mod error;
pub mod link;
pub mod metrics;
pub mod scenario;

pub use engine::{run, run_with_audit, AuditReport, SimOutcome, Simulation};
pub use error::SimError;
pub use metrics::{summary_json, tasks_csv, MetricsReport, TaskRow};
pub use scenario::{ScenarioConfig, SchedulerKind};
