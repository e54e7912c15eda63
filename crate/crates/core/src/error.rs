use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("singular weighted least-squares system")]
    SingularSystem,

    #[error("polynomial fit failed for table cell (b = {b}, n = {n})")]
    CellFit { b: f64, n: usize },

    #[error("normalizing-constant table does not cover {0}")]
    OutOfGrid(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("corrupt table file: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the `scr` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Parse { .. } | Error::OutOfGrid(_) => 2,
            Error::Csv(e) if !e.is_io_error() => 2,
            Error::SingularSystem | Error::CellFit { .. } | Error::Numeric(_) => 3,
            Error::TableFormat(_) | Error::Io(_) | Error::Csv(_) => 4,
        }
    }
}
