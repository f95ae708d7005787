use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dswm_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("PGM maxval {0} is not supported (only 255)")]
    PgmMaxval(u32),

    #[error("PGM payload truncated: {actual} of {expected} bytes")]
    PgmTruncated { expected: usize, actual: usize },

    #[error("table line {line}: {reason}")]
    Table { line: usize, reason: String },

    #[error("sidecar: {0}")]
    Sidecar(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
