//! Filtered two-mode squeezed vacuum with detection loss.

use crate::error::{Error, Result};
use crate::filters::OverlapFactors;
use crate::gaussian::CovarianceBlocks;
use crate::Cutoff;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsvParams {
    pub r: f64,
    pub eta_i: f64,
    pub eta_s: f64,
    /// Only `k_f` enters; with vacuum inputs `l_f` multiplies `n_I − n_S = 0`.
    pub overlap: OverlapFactors,
}

impl TmsvParams {
    pub fn new(r: f64, eta_i: f64, eta_s: f64, overlap: OverlapFactors) -> Result<Self> {
        let p = Self { r, eta_i, eta_s, overlap };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParameter { name: "r", value: self.r, reason: "squeezing must be finite and ≥ 0" });
        }
        for (name, eta) in [("eta_i", self.eta_i), ("eta_s", self.eta_s)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::InvalidParameter { name, value: eta, reason: "efficiency must lie in (0, 1]" });
            }
        }
        OverlapFactors::new(self.overlap.k_f, self.overlap.l_f)?;
        Ok(())
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    /// Covariance blocks of the filtered, lossy outputs.
    pub fn covariance(&self) -> CovarianceBlocks {
        let s = self.r.sinh();
        CovarianceBlocks {
            d_i: 1.0 + 2.0 * self.eta_i * s * s,
            d_s: 1.0 + 2.0 * self.eta_s * s * s,
            c11: (self.eta_i * self.eta_s).sqrt() * self.overlap.k_f * (2.0 * self.r).sinh(),
            c12: 0.0,
        }
    }
}

/// Closed-form critical squeezing amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsvCriticalPoints {
    /// Entanglement vanishes for `r ≥ r_ucf_en`; `tanh r_ucf_en = K_f`.
    pub r_ucf_en: Cutoff,
    /// Peak of `E_N(r)`.
    pub r_max_en: Cutoff,
    /// Minimum of the equal-weight hybrid variance at phase sum π.
    pub r_max_sq: Cutoff,
    /// Upper end of sub-SQL squeezing for that variance, `2·r_max_sq`.
    pub r_ucf_sq: Cutoff,
}

fn overlap_magnitude(p: &TmsvParams) -> Result<f64> {
    p.validate()?;
    let k = p.overlap.k_f.abs();
    if k == 0.0 {
        return Err(Error::InvalidParameter {
            name: "k_f",
            value: p.overlap.k_f,
            reason: "modes with zero overlap are never entangled",
        });
    }
    Ok(k)
}

pub fn critical_points(p: &TmsvParams) -> Result<TmsvCriticalPoints> {
    let k = overlap_magnitude(p)?;
    let (ei, es) = (p.eta_i, p.eta_s);
    let prod = ei * es;

    let r_ucf_en = Cutoff::from_tanh(k, 1.0);

    let q = (ei + es) * ((1.0 - k * k) * prod).sqrt();
    let den = 2.0 * prod + q;
    let num = (4.0 * prod * k * k * (2.0 * prod + q - prod * k * k)).sqrt();
    let r_max_en = if k >= 1.0 { Cutoff::Unbounded } else { Cutoff::from_tanh(num / den, 2.0) };

    let r_max_sq = Cutoff::from_tanh(2.0 * prod.sqrt() * k / (ei + es), 2.0);
    let r_ucf_sq = match r_max_sq {
        Cutoff::Finite(r) => Cutoff::Finite(2.0 * r),
        Cutoff::Unbounded => Cutoff::Unbounded,
    };
    Ok(TmsvCriticalPoints { r_ucf_en, r_max_en, r_max_sq, r_ucf_sq })
}

/// Weight ratio `μ_I/μ_S` of the maximally squeezed hybrid quadrature.
pub fn weight_ratio(p: &TmsvParams) -> Result<f64> {
    let k = overlap_magnitude(p)?;
    if p.r == 0.0 {
        return Err(Error::Uncorrelated);
    }
    let (ei, es) = (p.eta_i, p.eta_s);
    let t = p.r.tanh();
    let root = (4.0 * ei * es * k * k + (ei - es).powi(2) * t * t).sqrt();
    let d = (es - ei) * t;
    let g = 2.0 * k * (ei * es).sqrt();
    Ok(if d >= 0.0 { (root + d) / g } else { g / (root - d) })
}

/// Hybrid variance at the optimal phase and weights.
pub fn optimized_squeezing_closed(p: &TmsvParams) -> f64 {
    let (s, c) = (p.r.sinh(), p.r.cosh());
    let (ei, es, k) = (p.eta_i, p.eta_s, p.overlap.k_f);
    1.0 + (ei + es) * s * s - s * (4.0 * ei * es * k * k * c * c + (ei - es).powi(2) * s * s).sqrt()
}
