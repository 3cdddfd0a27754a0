use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {}: {source}", path.display())]
    Open {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: bad header, expected columns {expected}", path.display())]
    Header { path: PathBuf, expected: String },

    #[error("duplicate cell id {0:?} in cell table")]
    DuplicateCell(String),

    #[error("{0:?} is outside the configured bounding box")]
    OutOfBounds((f64, f64)),

    #[error("duplicate site at ({x:.3}, {y:.3}) m; merge cells before tessellating")]
    DuplicateSite { x: f64, y: f64 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid GeoJSON in {}: {reason}", path.display())]
    GeoJson { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("census table keys do not match: {0}")]
    KeyMismatch(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("missing artifact {}; run the producing stage first", path.display())]
    MissingArtifact { path: PathBuf },

    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// True when the failure was caused by the user's inputs or arguments
    /// rather than by a defect in the program.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            Error::Internal(_) => false,
            Error::Io { .. } => false,
            _ => true,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}
