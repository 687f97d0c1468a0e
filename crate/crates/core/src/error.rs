use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("covariance matrix is unphysical: smallest symplectic eigenvalue {nu_min:.6e} < 1/2")]
    Unphysical { nu_min: f64 },

    #[error("numerical domain error in {context}: {detail}")]
    NumericalDomain { context: &'static str, detail: String },

    #[error("range error: {0}")]
    Range(String),

    #[error("integration failed at t = {t:.6e} s: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("coupling eta = {eta:.6e} is outside the weak-coupling regime (must be < 1)")]
    CouplingTooStrong { eta: f64 },

    #[error("surfaces in contact: separation {separation:.6e} m <= 2R = {diameter:.6e} m")]
    Contact { separation: f64, diameter: f64 },

    #[error("masses collide at t = {contact_time:.6e} s (requested t = {t:.6e} s)")]
    Collision { t: f64, contact_time: f64 },

    #[error("wrong setup: {0}")]
    WrongSetup(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}
