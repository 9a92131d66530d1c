use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad lengths, nonpositive values, unsorted lists.
    #[error("validation error: {0}")]
    Validation(String),

    /// A spectral gap or construction precondition does not hold.
    #[error("condition not satisfied: {0}")]
    Condition(String),

    /// Characteristic roots are requested at eps = 0; the caller must use the
    /// parabolic branch (mu+ = -lambda, mu- infinitely fast).
    #[error("parabolic limit: eps = 0 has the single root mu+ = {mu_plus}")]
    ParabolicLimit { mu_plus: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A fixed-point or Newton iteration did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (last increment {last:.3e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    /// Every starting point of a nonlinear solve failed.
    #[error("no convergence from any seed: {}", attempts.join("; "))]
    SeedsExhausted { attempts: Vec<String> },

    /// A forward trajectory produced a non-finite state.
    #[error("non-finite state at t = {t_last_valid}")]
    NonFinite { t_last_valid: f64 },

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn condition(msg: impl Into<String>) -> Self {
        Error::Condition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
