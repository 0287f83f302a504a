use thiserror::Error;

/// Errors across the library, grouped by how the CLI maps them to exit codes:
/// `Input` and `Precondition` -> 3, `Budget` -> 2. A failed verification is
/// not an error; it is a `FolnerReport` with a `fail` verdict.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Error {
        Error::Input(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Error {
        Error::Precondition(msg.into())
    }
    pub fn budget(msg: impl Into<String>) -> Error {
        Error::Budget(msg.into())
    }
}
