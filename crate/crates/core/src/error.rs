use std::path::PathBuf;

use crate::linalg::SolveError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {len} {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{system} solve failed at step {step}: {source}")]
    Solve {
        system: &'static str,
        step: u64,
        #[source]
        source: SolveError,
    },

    #[error("run diverged at step {step}: max |q| = {max_abs_q:e}")]
    Diverged { step: u64, max_abs_q: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed data at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
