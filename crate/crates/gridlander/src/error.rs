use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] gridlander_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An input file that does not exist. Reported as a usage error.
    #[error("{}: no such file or directory", .0.display())]
    Missing(PathBuf),

    /// Malformed image, label or trace file.
    #[error("{}: {detail}", path.display())]
    Format { path: PathBuf, detail: String },

    /// Checkpoint bytes that fail the magic or checksum test.
    #[error("checkpoint integrity: {0}")]
    Integrity(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    /// Checkpoint that is well formed but holds the wrong model.
    #[error("checkpoint schema: {0}")]
    Schema(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::Missing(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }

    pub(crate) fn format(path: &Path, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            detail: detail.into(),
        }
    }

    /// 2 for bad invocations, configs and inputs the caller named wrongly;
    /// 1 for faults discovered while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(gridlander_core::Error::Contract(_)) | Error::Missing(_) | Error::Config(_) => 2,
            _ => 1,
        }
    }
}
