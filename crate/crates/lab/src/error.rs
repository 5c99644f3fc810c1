use shrinker_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn usage(msg: impl Into<String>) -> Self {
        LabError::Usage(msg.into())
    }

    /// 1 failed criterion, 2 usage or configuration, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(CoreError::Numerical(_)) => 3,
            LabError::Core(CoreError::Criterion(_)) => 1,
            _ => 2,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
