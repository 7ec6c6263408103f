use thiserror::Error;

/// Typed errors for the scheduling library.
///
/// Construction-time validation uses `InvalidParameter`; runtime contract
/// violations get their own variants so callers can match on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A strictly-positive quantity was zero or negative. Carries the value so
    /// the caller can see what it actually passed (usually an unassigned pair
    /// ending up in a latency computation).
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("latency must be nonnegative, got {value}")]
    NegativeLatency { value: f64 },

    #[error("no latency entry for assigned pair (task {task}, vehicle {vehicle})")]
    MissingLatency { task: u64, vehicle: u64 },

    #[error("sample for vehicle {vehicle} is not newer than the last one ({last} -> {time})")]
    OutOfOrderSample { vehicle: u64, last: f64, time: f64 },

    #[error("vehicle set is empty")]
    EmptyVehicleSet,

    #[error("no incoming tasks to assign")]
    EmptyTaskSet,

    #[error("allocation for task {task} must be positive")]
    ZeroAllocation { task: u64 },
}

impl CoreError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        CoreError::InvalidParameter { field, reason: reason.into() }
    }
}
