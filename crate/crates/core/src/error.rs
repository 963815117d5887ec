use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("condition number undefined: objective is not strongly convex (mu = 0)")]
    UndefinedConditionNumber,
    #[error("method not applicable: {0}")]
    MethodInapplicable(String),
    #[error("time-domain error: t = {t} lies before t0 = {t0}")]
    TimeDomain { t: f64, t0: f64 },
    #[error("non-finite state encountered at step {step}")]
    Divergence { step: usize },
    #[error("insufficient data: {usable} usable points, need at least {required}")]
    InsufficientData { usable: usize, required: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("internal consistency violated at step {step}: {what}")]
    Consistency { step: usize, what: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
