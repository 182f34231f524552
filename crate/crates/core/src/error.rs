use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("archive dimensions differ: {left} bins vs {right} bins")]
    DimensionMismatch { left: usize, right: usize },

    #[error("cannot merge an empty list of maps")]
    EmptyMapList,

    #[error("archive has no occupied cells")]
    EmptyArchive,

    #[error(
        "reference map has no usable value for cell ({i},{j}) occupied with fitness {fitness}"
    )]
    InconsistentReference { i: usize, j: usize, fitness: u32 },

    #[error("sample too small: need at least {min} values, got {got}")]
    SampleTooSmall { min: usize, got: usize },

    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("no usable runs found")]
    NoUsableRuns,

    #[error("{path} already exists and is not empty (pass --force to overwrite)")]
    OutputExists { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
