use thiserror::Error;

/// Errors raised by the state models and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-physical covariance matrix: {0}")]
    NonPhysical(String),

    #[error("covariance matrix is singular")]
    Singular,

    #[error("uncorrelated state: C11 = C12 = 0")]
    Uncorrelated,

    #[error("closed-form overlap needs filters of the same family; use the numeric overlap instead")]
    MixedFamilies,

    #[error("adaptive quadrature did not converge after {intervals} subintervals (error estimate {error_estimate:e})")]
    QuadratureNotConverged {
        intervals: usize,
        error_estimate: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(name))
    }
}
