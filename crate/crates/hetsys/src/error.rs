use thiserror::Error;

/// Failures of the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Engine(#[from] hetsys_core::Error),
}

impl CliError {
    /// 2 for bad input, 1 when the computation itself failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
