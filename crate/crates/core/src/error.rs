use thiserror::Error;

/// Errors produced by the laboratory.
///
/// Hypothesis failures found by [`crate::coefficients::validate_hypotheses`] are
/// report entries, not errors; `Hypothesis` is only raised by constructors that
/// refuse to build an object outside its admissible parameter range.
#[derive(Debug, Error)]
pub enum Error {
    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("division guard: {0}")]
    DivisionGuard(String),

    #[error("setup error: {0}")]
    Setup(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
