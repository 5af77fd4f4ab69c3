use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the model function.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// Shoot-through duty at or beyond the 1/(1 - 2 d_s) boost singularity.
    #[error("boost singularity: shoot-through duty {d_s} must be below 0.5")]
    Singularity { d_s: f64 },

    #[error("operating point is not stationary (derivative residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("shoot-through duty {d_s} exceeds the zero-state budget {limit}")]
    ConstraintViolation { d_s: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error("non-finite state at t = {t} s: {what}")]
    NonFinite { t: f64, what: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl Into<f64>) -> Self {
        Error::Domain { what, value: value.into() }
    }

    /// True for errors caused by the inputs rather than by the simulation itself.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NonFinite { .. } | Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
