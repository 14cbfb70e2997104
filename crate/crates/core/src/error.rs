use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("DomainError: {0}")]
    Domain(String),
    #[error("GridError: {0}")]
    Grid(String),
    #[error("EigFailure: {0}")]
    Eig(String),
    #[error("ContinuationError: {0}")]
    Continuation(String),
    #[error("DegenerateModeError: {0}")]
    DegenerateMode(String),
    #[error("PropagationError: {0}")]
    Propagation(String),
    #[error("FitError: {0}")]
    Fit(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("IOError: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Name of the originating error kind, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::Grid(_) => "GridError",
            Error::Eig(_) => "EigFailure",
            Error::Continuation(_) => "ContinuationError",
            Error::DegenerateMode(_) => "DegenerateModeError",
            Error::Propagation(_) => "PropagationError",
            Error::Fit(_) => "FitError",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IOError",
        }
    }

    /// Process exit code: 1 for invalid input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Grid(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::Eig(_) | Error::Continuation(_) | Error::DegenerateMode(_) | Error::Propagation(_) | Error::Fit(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
