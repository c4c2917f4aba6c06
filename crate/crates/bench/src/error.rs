use thiserror::Error;

/// Failures of the experiment harness.
#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad configuration or arguments; the message carries `file:line` when known.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] sir_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("render: {0}")]
    Render(String),
}

impl BenchError {
    /// Process exit status: 2 for validation problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Core(sir_core::Error::Config(_) | sir_core::Error::InvalidArgument(_) | sir_core::Error::TomlDe(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
