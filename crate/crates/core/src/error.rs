//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// File does not start with the expected magic bytes or has an
    /// unsupported version/dtype tag.
    #[error("container format error: {0}")]
    Format(String),

    /// Payload length does not match the axis metadata.
    #[error("container length error: {0}")]
    Length(String),

    /// Non-finite samples or values violating a type invariant.
    #[error("data error: {0}")]
    Data(String),

    /// Configuration or argument outside its documented domain.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical contract was violated (off-shell ray state, failed
    /// guard, dot-test residual above threshold, ...).
    #[error("numerical contract violated: {0}")]
    Contract(String),

    /// Evaluation requested outside the admissible domain of a symbol
    /// (evanescent regime, turning ray, no root on the branch).
    #[error("domain error: {0}")]
    Domain(String),

    /// Axis mismatch between operands.
    #[error("axis error: {0}")]
    Axis(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit-code class used by the command-line harness:
    /// 2 config, 3 numerical contract, 4 I/O and file format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Contract(_) | Error::Domain(_) => 3,
            Error::Data(_) | Error::Axis(_) => 3,
            Error::Format(_) | Error::Length(_) | Error::Io(_) => 4,
        }
    }
}
