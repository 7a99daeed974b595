use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value outside the operation's domain (t ∉ [0,1], k > K, empty vote, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A Markov specification that is not a valid stochastic model.
    #[error("invalid Markov specification: {0}")]
    Validation(String),

    #[error("{path}:{line}: {message}")]
    Task {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Transport-level failure talking to a remote denoiser; safe to retry.
    #[error("denoiser transport error: {0}")]
    Transport(String),

    /// The denoiser answered, but the answer violates the wire contract.
    #[error("denoiser protocol error: {0}")]
    Protocol(String),

    #[error("run failed: {0}")]
    Run(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }

    /// Process exit code used by the `dvote` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Validation(_) => 1,
            Error::Task { .. } | Error::Json(_) => 2,
            Error::Transport(_) | Error::Protocol(_) => 3,
            Error::Run(_) => 3,
            Error::Io { .. } => 2,
        }
    }
}
