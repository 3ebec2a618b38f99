use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant violated: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
    #[error(transparent)]
    Core(#[from] walklab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::InvariantViolation(_) => 3,
            _ => 1,
        }
    }
}
