use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the path loss toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file or document does not follow its expected layout.
    #[error("malformed {format}: {message}")]
    Format {
        format: &'static str,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}) m lies outside the {width_m} x {height_m} m map")]
    OutOfBounds {
        x: f64,
        y: f64,
        width_m: f64,
        height_m: f64,
    },

    /// The receiver sits inside the close-in region, where the model is undefined.
    #[error("receiver distance {distance} m does not exceed close-in distance d0 = {d0} m")]
    WithinCloseIn { distance: f64, d0: f64 },

    #[error("dimension mismatch: expected {expected} region types, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("too few data points: {found} given, at least {required} needed")]
    NotIdentifiable { found: usize, required: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("shadow fading deviation collapsed to {sigma:e} dB (limit {limit:e} dB)")]
    SigmaCollapse { sigma: f64, limit: f64 },

    #[error("sampling budget exhausted: kept {kept} of {requested} after {draws} draws")]
    RetryBudgetExhausted {
        kept: usize,
        requested: usize,
        draws: usize,
    },
}

impl Error {
    pub(crate) fn format(format: &'static str, message: impl Into<String>) -> Self {
        Error::Format {
            format,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::SigmaCollapse { .. })
    }
}
