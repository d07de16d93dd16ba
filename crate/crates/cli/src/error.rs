use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema violations, unknown models and malformed parameters.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] cdkernel::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Compute(_) | Self::Io(_) => 1,
        }
    }
}
