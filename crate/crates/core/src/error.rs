use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed input: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("row count mismatch: geometry has {expected} sections, data has {found} rows")]
    RowMismatch { expected: usize, found: usize },

    #[error("row {row}: section id {found:?} does not match geometry section {expected:?}")]
    SectionMismatch {
        row: usize,
        expected: String,
        found: String,
    },

    #[error("timestamps are not strictly increasing with uniform spacing at column {column}")]
    NonMonotonicTime { column: usize },

    #[error("negative speed {value} at row {row}, column {column}")]
    NegativeSpeed { row: usize, column: usize, value: f64 },

    #[error("target interval {target} min is not a positive multiple of {source_interval} min")]
    NotAMultiple { target: u32, source_interval: u32 },

    #[error("speed data collapse into a single histogram bin")]
    DegenerateData,

    #[error("need at least {needed} positive samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("structuring element {se_rows}x{se_cols} larger than grid {rows}x{cols}")]
    SeLargerThanGrid {
        se_rows: usize,
        se_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("region has no cells")]
    EmptyRegion,

    #[error("invalid fundamental diagram: {0}")]
    InvalidFd(String),

    #[error("speed {speed} outside [0, {u_free})")]
    OutOfRange { speed: f64, u_free: f64 },

    #[error("need at least 2 sections, got {0}")]
    TooFewRows(usize),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
