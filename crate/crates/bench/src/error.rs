use std::path::Path;

use shufflepriv_core::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(Error::Io(_) | Error::Csv { .. } | Error::EmptyCsv) | Self::Io { .. } => EXIT_IO,
            Self::Core(Error::Divergence { .. }) => EXIT_DIVERGENCE,
            Self::Core(_) => EXIT_CONFIG,
        }
    }
}
