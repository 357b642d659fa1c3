use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A classifier was queried before every class had at least one observation.
    #[error("untrained class {0}")]
    UntrainedClass(usize),
    /// The ridge normal matrix could not be factorized.
    #[error("singular design matrix")]
    SingularDesign,
    /// AR coefficients whose characteristic polynomial has a root on or inside the unit circle.
    #[error("nonstationary AR parameters (smallest root modulus {0:.6})")]
    Nonstationary(f64),
    /// The requested level cannot be reached by the benchmark function.
    #[error("level {alpha} unattainable: admissible range is ({lo}, {hi})")]
    LevelUnattainable { alpha: f64, lo: f64, hi: f64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty trace")]
    EmptyTrace,
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
