use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] epilim_core::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
