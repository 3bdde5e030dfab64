use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("missing assignment for variable {0}")]
    MissingAssignment(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
