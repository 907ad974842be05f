use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("no gray candidates")]
    NoGrayCandidates,

    #[error("degenerate estimate")]
    DegenerateEstimate,

    #[error("degenerate illuminant")]
    DegenerateIlluminant,

    #[error("no valid pixels")]
    NoValidPixels,

    #[error("overflow: rendered value {value} at ({x}, {y}) exceeds 1")]
    Overflow { x: usize, y: usize, value: f64 },

    #[error("empty manifest")]
    EmptyManifest,

    #[error("empty error list")]
    EmptyErrorList,

    #[error("unknown method `{name}` (registered: {})", known.join(", "))]
    UnknownMethod { name: String, known: Vec<String> },

    #[error("unknown camera `{0}`")]
    UnknownCamera(String),

    #[error("invalid manifest:\n{}", .0.join("\n"))]
    Manifest(Vec<String>),

    #[error("{0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for the failures that stem from the image content rather than
    /// from arguments or I/O.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::NoGrayCandidates
                | Error::DegenerateEstimate
                | Error::DegenerateIlluminant
                | Error::NoValidPixels
        )
    }
}
