use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied something malformed: wrong dimensions, bad ranges, unknown names.
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// The eigensolver did not produce a trustworthy spectrum.
    #[error("unreliable spectrum (dim {dim}, residual {residual:e}, converged {converged})")]
    UnreliableSpectrum {
        dim: usize,
        residual: f64,
        converged: bool,
    },

    /// Two independent computations that must agree did not.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("malformed function file: {0}")]
    FunctionFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }

    /// True for errors caused by the caller's input.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Dimension { .. } | Error::FunctionFile(_) | Error::Io(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
