use thiserror::Error;

/// Errors raised by the optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("label {0} is not in {{-1, +1}}")]
    InvalidLabel(f64),

    #[error("sample has no response but the task needs one")]
    MissingResponse,

    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("infinite privacy loss: sigma is zero but {0} private epochs are noisy")]
    InfinitePrivacyLoss(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("iterate diverged during epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("public data required by the schedule but not supplied")]
    MissingPublicData,

    #[error("csv parse error at row {row}, column {column}: {kind}")]
    Csv {
        row: usize,
        column: usize,
        kind: CsvErrorKind,
    },

    #[error("empty csv input")]
    EmptyCsv,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvErrorKind {
    Ragged { expected: usize, found: usize },
    NonNumeric(String),
    ColumnOutOfRange(usize),
    Malformed(String),
}

impl std::fmt::Display for CsvErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsvErrorKind::Ragged { expected, found } => {
                write!(f, "ragged row: expected {expected} fields, found {found}")
            }
            CsvErrorKind::NonNumeric(s) => write!(f, "non-numeric cell {s:?}"),
            CsvErrorKind::ColumnOutOfRange(c) => write!(f, "column {c} out of range"),
            CsvErrorKind::Malformed(s) => write!(f, "malformed record: {s}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
