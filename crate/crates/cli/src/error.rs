use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("stale lens table: {0}")]
    Stale(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] wonglens::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 I/O, 2 config or stale data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Stale(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
