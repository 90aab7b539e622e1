use thiserror::Error;

/// Errors raised by the numerical routines and criterion checkers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite sample {value} at t = {t}")]
    NonFiniteSample { t: f64, value: f64 },
    #[error("quadrature tolerance not met after {panels} panels (estimated error {estimate:e})")]
    ToleranceNotMet { estimate: f64, panels: usize },
    #[error("tail information missing: {0}")]
    TailInfoMissing(String),
    #[error("singular start failed: second Picard iterate moved z'(eps) by {delta:e}")]
    SingularStartFailure { delta: f64 },
    #[error("integrator step underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("comparison function evaluated at its pole t = {t}")]
    AtPole { t: f64 },
    #[error("t = {t} outside the validity interval of the envelope: {reason}")]
    OutOfValidity { t: f64, reason: String },
    #[error("anchors differ at t = {t}: q1 = {q1}, q2 = {q2}")]
    MismatchedAnchor { t: f64, q1: f64, q2: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("no certified zero at t2 = {t2}")]
    NoZeroAtT2 { t2: f64 },
    #[error("catalog derivative missing for warping `{0}`")]
    CatalogDerivativeMissing(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Variant name, for tables and exit-status mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFiniteSample { .. } => "NonFiniteSample",
            Error::ToleranceNotMet { .. } => "ToleranceNotMet",
            Error::TailInfoMissing(_) => "TailInfoMissing",
            Error::SingularStartFailure { .. } => "SingularStartFailure",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::AtPole { .. } => "AtPole",
            Error::OutOfValidity { .. } => "OutOfValidity",
            Error::MismatchedAnchor { .. } => "MismatchedAnchor",
            Error::InvalidParams(_) => "InvalidParams",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::NoZeroAtT2 { .. } => "NoZeroAtT2",
            Error::CatalogDerivativeMissing(_) => "CatalogDerivativeMissing",
        }
    }
}
