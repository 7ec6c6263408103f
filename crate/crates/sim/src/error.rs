use cave_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl SimError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> SimError {
        SimError::Invalid { field, reason: reason.into() }
    }
}
