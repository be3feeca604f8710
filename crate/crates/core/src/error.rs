use std::io;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A standing assumption on the cost coefficients fails on the grid.
    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }

    /// Machine-readable category, also used as the CLI exit code.
    pub fn category(&self) -> (&'static str, i32) {
        match self {
            Error::Config { .. }
            | Error::InvalidCoefficients(_)
            | Error::InvalidDistribution(_)
            | Error::Io(_) => ("config", 1),
            Error::Assumption(_) | Error::InvalidInput(_) => ("assumptions", 2),
            Error::Numerical(_) => ("numerical", 3),
        }
    }
}
