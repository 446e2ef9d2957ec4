use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config file or referenced input files.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qswlab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
