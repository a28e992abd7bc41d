use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// An asymptotic formula was asked for outside the regime it describes.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("evaluation grid must be nonempty, nonnegative and strictly increasing")]
    InvalidGrid,

    #[error(
        "integration failed after {evaluations} evaluations ({reason}); partial estimate {partial} +/- {abs_error}"
    )]
    Integration {
        reason: String,
        partial: f64,
        abs_error: f64,
        evaluations: usize,
    },

    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerical machinery (quadrature, root bracketing).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::Bracket { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
