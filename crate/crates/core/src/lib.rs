//! Entanglement, two-mode squeezing, purity and Wigner-CHSH non-locality of
//! spectrally filtered two-mode squeezed vacuum and thermal states.
//!
//! Quick start:
//!
//! ```
//! use ftms_core::{filters::OverlapFactors, gaussian, tmsv::TmsvParams};
//!
//! let p = TmsvParams::new(0.5, 1.0, 1.0, OverlapFactors::IDENTICAL).unwrap();
//! let v = gaussian::build_covariance(&p.covariance()).unwrap();
//! let e = gaussian::log_negativity(&v).unwrap();
//! assert!((e.e_n - 1.0).abs() < 1e-12);
//! ```

pub mod bell;
pub mod error;
pub mod fieldsim;
pub mod filters;
pub mod gaussian;
pub mod optim;
pub mod quad;
pub mod thermal;
pub mod tmsv;

pub use error::{Error, Result};

/// A critical squeezing amplitude that may not exist at any finite `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutoff {
    Finite(f64),
    Unbounded,
}

impl Cutoff {
    /// The amplitude as a float, `+∞` when unbounded.
    pub fn value(self) -> f64 {
        match self {
            Cutoff::Finite(r) => r,
            Cutoff::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Cutoff::Finite(_))
    }

    /// `atanh(t)`/`scale`, unbounded once `t` reaches 1.
    pub(crate) fn from_tanh(t: f64, scale: f64) -> Self {
        if t >= 1.0 {
            Cutoff::Unbounded
        } else {
            Cutoff::Finite(t.atanh() / scale)
        }
    }
}

impl std::fmt::Display for Cutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cutoff::Finite(r) => write!(f, "{r}"),
            Cutoff::Unbounded => f.write_str("inf"),
        }
    }
}
