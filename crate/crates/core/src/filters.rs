//! Causal mode-selection filters and the overlap of two filter modes.
//!
//! The overlap of the idler filter `h_K` and the signal filter `h_L` is
//! `∫ h_K*(t) h_L(t) dt = K_f + i L_f`. `K_f` scales the inter-mode
//! correlation; `L_f` enters thermal states through the cross-quadrature term.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{finite, Error, Result};
use crate::quad::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterFamily {
    /// Rectangular window of length τ.
    Step,
    /// One-sided exponential with decay time τ.
    Exponential,
}

impl std::str::FromStr for FilterFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "step" => Ok(Self::Step),
            "exponential" | "exp" => Ok(Self::Exponential),
            _ => Err(Error::InvalidConfig(format!("unknown filter family `{s}`"))),
        }
    }
}

impl std::fmt::Display for FilterFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Step => "step",
            Self::Exponential => "exponential",
        })
    }
}

/// One spectral filter: family, center frequency Ω and time constant τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub family: FilterFamily,
    pub omega: f64,
    pub tau: f64,
}

impl FilterSpec {
    pub fn new(family: FilterFamily, omega: f64, tau: f64) -> Result<Self> {
        let f = Self { family, omega, tau };
        f.validate()?;
        Ok(f)
    }

    pub fn step(omega: f64, tau: f64) -> Result<Self> {
        Self::new(FilterFamily::Step, omega, tau)
    }

    pub fn exponential(omega: f64, tau: f64) -> Result<Self> {
        Self::new(FilterFamily::Exponential, omega, tau)
    }

    pub fn validate(&self) -> Result<()> {
        finite("omega", self.omega)?;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter { name: "tau", value: self.tau, reason: "time constant must be > 0" });
        }
        Ok(())
    }
}

/// Real and imaginary parts of the overlap of two unit-norm filter modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapFactors {
    pub k_f: f64,
    pub l_f: f64,
}

impl OverlapFactors {
    pub const IDENTICAL: Self = Self { k_f: 1.0, l_f: 0.0 };

    pub fn new(k_f: f64, l_f: f64) -> Result<Self> {
        finite("k_f", k_f)?;
        finite("l_f", l_f)?;
        if k_f * k_f + l_f * l_f > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter {
                name: "k_f",
                value: k_f,
                reason: "overlap of unit-norm modes needs k_f² + l_f² ≤ 1",
            });
        }
        Ok(Self { k_f, l_f })
    }
}

/// Time-domain filter amplitude `h(t)`, normalized to `∫|h|² dt = 1`.
pub fn eval_time(f: &FilterSpec, t: f64) -> Complex64 {
    if t < 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let carrier = Complex64::from_polar(1.0, -f.omega * t);
    match f.family {
        FilterFamily::Step => {
            if t < f.tau {
                carrier / f.tau.sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        FilterFamily::Exponential => carrier * (2.0 / f.tau).sqrt() * (-t / f.tau).exp(),
    }
}

/// Fourier transform `h̃(ω) = (2π)^{-1/2} ∫ h(t) e^{iωt} dt`.
pub fn eval_freq(f: &FilterSpec, omega: f64) -> Complex64 {
    let x = omega - f.omega;
    match f.family {
        FilterFamily::Step => {
            let half = 0.5 * x * f.tau;
            let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
            Complex64::from_polar((f.tau / (2.0 * PI)).sqrt() * sinc, half)
        }
        FilterFamily::Exponential => {
            Complex64::new((f.tau / PI).sqrt(), 0.0) / Complex64::new(1.0, -f.tau * x)
        }
    }
}

// Below this |Δ|·max τ the step kernel uses its Taylor expansion.
const SMALL_DETUNING: f64 = 1e-8;

/// Closed-form overlap of two filters from the same family.
pub fn overlap_closed_form(fi: &FilterSpec, fs: &FilterSpec) -> Result<OverlapFactors> {
    fi.validate()?;
    fs.validate()?;
    if fi.family != fs.family {
        return Err(Error::MixedFamilies);
    }
    let delta = fi.omega - fs.omega;
    let geo = (fi.tau * fs.tau).sqrt();
    let (k_f, l_f) = match fi.family {
        FilterFamily::Step => {
            let tau = fi.tau.min(fs.tau);
            let x = tau * delta;
            if delta.abs() * fi.tau.max(fs.tau) < SMALL_DETUNING {
                let scale = tau / geo;
                (scale * (1.0 - x * x / 6.0), scale * 0.5 * x)
            } else {
                // 1 − cos x written as 2 sin²(x/2) to keep precision at small x.
                let half = 0.5 * x;
                (x.sin() / (geo * delta), 2.0 * half.sin() * half.sin() / (geo * delta))
            }
        }
        FilterFamily::Exponential => {
            let (ti, ts) = (fi.tau, fs.tau);
            let den = ti * ti * ts * ts * delta * delta + (ti + ts) * (ti + ts);
            (2.0 * geo * (ti + ts) / den, 2.0 * geo * geo * geo * delta / den)
        }
    };
    Ok(OverlapFactors { k_f, l_f })
}

/// End of the truncated support used by [`overlap_numeric`].
fn support_end(f: &FilterSpec, tau_max: f64, tol: f64) -> f64 {
    match f.family {
        FilterFamily::Step => f.tau,
        FilterFamily::Exponential => {
            (tau_max * (4.0 * tau_max / tol).ln()).max(0.5 * tau_max * (10.0 / tol).ln())
        }
    }
}

/// Overlap by adaptive quadrature of `∫ h_K*(t) h_L(t) dt` in the time
/// domain. Works for mixed families.
pub fn overlap_numeric(fi: &FilterSpec, fs: &FilterSpec, tol: f64) -> Result<OverlapFactors> {
    fi.validate()?;
    fs.validate()?;
    if !(1e-12..=1e-3).contains(&tol) {
        return Err(Error::InvalidParameter { name: "tol", value: tol, reason: "tolerance must lie in [1e-12, 1e-3]" });
    }
    let tau_max = fi.tau.max(fs.tau);
    let end_i = support_end(fi, tau_max, tol);
    let end_s = support_end(fs, tau_max, tol);
    let end = end_i.min(end_s);

    let mut breakpoints = vec![0.0, end];
    // Step edges inside the joint support are kinks of the integrand.
    for e in [end_i, end_s] {
        if e > 0.0 && e < end {
            breakpoints.push(e);
        }
    }
    breakpoints.sort_by(f64::total_cmp);

    let detuning = (fi.omega - fs.omega).abs();
    let periods = detuning * end / (2.0 * PI);
    let opts = QuadOptions {
        abs_tol: 0.5 * tol,
        max_intervals: 50_000,
        initial_pieces: (periods.ceil() as usize + 1).min(2_000),
    };
    let q = integrate(|t| eval_time(fi, t).conj() * eval_time(fs, t), &breakpoints, opts)?;
    Ok(OverlapFactors { k_f: q.value.re, l_f: q.value.im })
}

/// Center frequencies `Ω + n·2π/τ` of the mutually orthogonal step modes.
pub fn orthonormal_frequencies(f: &FilterSpec, n_range: RangeInclusive<i64>) -> Vec<f64> {
    let spacing = 2.0 * PI / f.tau;
    n_range.map(|n| f.omega + n as f64 * spacing).collect()
}
