use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("cell ({i}, {j}) does not hold a {expected} individual")]
    WrongSpecies {
        i: usize,
        j: usize,
        expected: &'static str,
    },

    /// A density left the admissible box; usually a CFL or stability violation.
    #[error("solver abort at t = {t}: {reason}")]
    SolverAbort { t: f64, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn abort(t: f64, reason: impl Into<String>) -> Self {
        Error::SolverAbort {
            t,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
