use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{}:{line}: {message}", file.display())]
    Format {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cost model violated: {0}")]
    CostModel(String),

    #[error("assignment solver failed: {0}")]
    Solver(String),

    #[error("cannot split dataset: class {class} has only {count} members (need at least 3)")]
    Split { class: i64, count: usize },

    #[error("instance too large: {0}")]
    Capacity(String),

    #[error("all points are identical; cluster cannot be bisected")]
    Degenerate,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
