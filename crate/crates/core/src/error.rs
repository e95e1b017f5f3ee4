use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse failure classes; the CLI maps each to its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Validation,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{file}:{line}: {message}")]
    Config {
        file: String,
        line: usize,
        message: String,
    },

    #[error("row {row}, column '{column}': {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no observable events")]
    NoEvents,

    #[error("no comparable pairs")]
    NoComparablePairs,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("singular Hessian ({0}); screen features with VIF or set a ridge penalty")]
    SingularHessian(String),

    #[error("null model reached: every feature was eliminated")]
    NullModel,

    #[error("non-finite loss at epoch {epoch}; try a lower learning rate")]
    Diverged { epoch: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
}

impl Error {
    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv(e) if e.is_io_error() => ErrorKind::Io,
            Error::NonFinite(_)
            | Error::SingularHessian(_)
            | Error::Diverged { .. }
            | Error::AllTrialsFailed(_) => ErrorKind::Numerical,
            Error::Fold { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }
}
