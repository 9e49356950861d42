use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The adaptive integrator could not continue.
    #[error("integration failed at t = {t:e} s: {reason}")]
    Integration { t: f64, reason: String },

    /// Bisection on the Rabi frequency could not bracket the threshold.
    #[error("calibration failed at grid point (delta_nu = {delta_nu:e} Hz, t_s = {t_s:e} s): {reason}")]
    Calibration {
        delta_nu: f64,
        t_s: f64,
        reason: String,
    },

    /// Rejection sampling of the initial ensemble was too inefficient.
    #[error("sampling failed: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

impl From<crate::ode::OdeError> for Error {
    fn from(e: crate::ode::OdeError) -> Self {
        Error::Integration {
            t: e.t,
            reason: e.reason.to_string(),
        }
    }
}
