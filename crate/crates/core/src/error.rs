use thiserror::Error;

/// Errors raised by models, estimators and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates the model's constraints (e.g. a non-positive variance).
    #[error("parameter outside its domain: {0}")]
    Domain(String),

    /// A sufficient statistic lies outside the admissible set, so the M-step is undefined.
    #[error("inadmissible sufficient statistic: {0}")]
    Inadmissible(String),

    /// A malformed observation (wrong dimension, non-finite coordinate, ...).
    #[error("invalid observation: {0}")]
    Observation(String),

    /// A bad argument to an estimator or harness routine.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The model does not provide an optional capability.
    #[error("capability not provided by this model: {0}")]
    Unsupported(&'static str),

    /// Too many failed replications in an experiment.
    #[error("{failed} of {total} replications failed (limit 1%)")]
    Replications { failed: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error signals a statistic outside the M-step's domain.
    /// Online estimators freeze the parameter on these instead of aborting.
    pub fn is_inadmissible(&self) -> bool {
        matches!(self, Error::Inadmissible(_))
    }

    /// Prefix the message with extra context, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Inadmissible(m) => Error::Inadmissible(format!("{ctx}: {m}")),
            Error::Observation(m) => Error::Observation(format!("{ctx}: {m}")),
            Error::Argument(m) => Error::Argument(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
