//! Filtered two-mode squeezed thermal light, detected with unit efficiency.
//!
//! With `A = n_I + n_S + 1` and `B = n_I − n_S` the blocks are
//! `D_{I,S} = ±B + A cosh 2r`, `C11 = A K_f sinh 2r`, `C12 = −B L_f sinh 2r`.
//! Lossy thermal states can be built by passing [`ThermalParams::covariance`]
//! through [`crate::gaussian::apply_loss`]; the closed forms here assume no loss.

use crate::error::{Error, Result};
use crate::filters::OverlapFactors;
use crate::gaussian::CovarianceBlocks;
use crate::Cutoff;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub r: f64,
    pub n_i: f64,
    pub n_s: f64,
    pub overlap: OverlapFactors,
}

impl ThermalParams {
    pub fn new(r: f64, n_i: f64, n_s: f64, overlap: OverlapFactors) -> Result<Self> {
        let p = Self { r, n_i, n_s, overlap };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::InvalidParameter { name: "r", value: self.r, reason: "squeezing must be finite and ≥ 0" });
        }
        for (name, n) in [("n_i", self.n_i), ("n_s", self.n_s)] {
            if !(n.is_finite() && n >= 0.0) {
                return Err(Error::InvalidParameter { name, value: n, reason: "thermal occupation must be finite and ≥ 0" });
            }
        }
        OverlapFactors::new(self.overlap.k_f, self.overlap.l_f)?;
        Ok(())
    }

    pub fn with_r(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    pub fn a(&self) -> f64 {
        self.n_i + self.n_s + 1.0
    }

    pub fn b(&self) -> f64 {
        self.n_i - self.n_s
    }

    /// `A²K_f² + B²L_f²`.
    fn g(&self) -> f64 {
        let (a, b) = (self.a(), self.b());
        let (k, l) = (self.overlap.k_f, self.overlap.l_f);
        a * a * k * k + b * b * l * l
    }

    pub fn covariance(&self) -> CovarianceBlocks {
        let (a, b) = (self.a(), self.b());
        let (ch, sh) = ((2.0 * self.r).cosh(), (2.0 * self.r).sinh());
        CovarianceBlocks {
            d_i: b + a * ch,
            d_s: -b + a * ch,
            c11: a * self.overlap.k_f * sh,
            c12: -b * self.overlap.l_f * sh,
        }
    }
}

/// Range of `r` over which a quantity stays below its classical bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Empty,
    Range { lower: f64, upper: Cutoff },
}

impl Window {
    pub fn contains(&self, r: f64) -> bool {
        match *self {
            Window::Empty => false,
            Window::Range { lower, upper } => r > lower && r < upper.value(),
        }
    }

    pub fn lower(&self) -> Option<f64> {
        match *self {
            Window::Empty => None,
            Window::Range { lower, .. } => Some(lower),
        }
    }

    pub fn upper(&self) -> Option<Cutoff> {
        match *self {
            Window::Empty => None,
            Window::Range { upper, .. } => Some(upper),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCriticalPoints {
    /// Where `E_N > 0`. The optimized hybrid variance is sub-SQL on exactly
    /// the same range.
    pub entanglement: Window,
    /// Peak of `E_N(r)`; `None` for an empty window.
    pub r_max_en: Option<Cutoff>,
    /// Where the equal-weight hybrid variance at phase sum `π − ζ` is sub-SQL.
    pub squeezing: Window,
    /// Minimum of that equal-weight variance.
    pub r_max_sq: Cutoff,
    /// Squeezing angle `arctan(B L_f / (A K_f))`, radians.
    pub zeta: f64,
}

// Below this `A² − G` the upper entanglement cutoff is treated as infinite.
const SINGULAR_DENOMINATOR: f64 = 1e-12;

/// `r` from `cosh 2r − 1`, without the loss of precision in `acosh` near 1.
fn r_from_cosh2_excess(d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        0.5 * (d + (d * (2.0 + d)).sqrt()).ln_1p()
    }
}

pub fn critical_points(p: &ThermalParams) -> Result<ThermalCriticalPoints> {
    p.validate()?;
    let k = p.overlap.k_f.abs();
    if k == 0.0 {
        return Err(Error::InvalidParameter {
            name: "k_f",
            value: p.overlap.k_f,
            reason: "modes with zero overlap are never entangled",
        });
    }
    let (a, b) = (p.a(), p.b());
    let g = p.g();
    let eps = a * a - g;

    // E_N = 0 ⟺ ε y² − 2A y + (1 + G − B²) = 0 in y = cosh 2r. Shifted to
    // d = y − 1 this reads ε d² − 2(A − ε) d + 4 n_I n_S = 0.
    let q = a - eps;
    let nn = 4.0 * p.n_i * p.n_s;
    let entanglement = if eps <= SINGULAR_DENOMINATOR {
        if q > 0.0 {
            Window::Range { lower: r_from_cosh2_excess(0.5 * nn / q), upper: Cutoff::Unbounded }
        } else {
            Window::Empty
        }
    } else {
        let rad = q * q - eps * nn;
        let s = if rad >= 0.0 { rad.sqrt() } else { f64::NAN };
        if !(q + s > 0.0) {
            Window::Empty
        } else {
            Window::Range {
                lower: r_from_cosh2_excess(nn / (q + s)),
                upper: Cutoff::Finite(r_from_cosh2_excess((q + s) / eps)),
            }
        }
    };

    let r_max_en = match entanglement {
        Window::Empty => None,
        Window::Range { upper: Cutoff::Unbounded, .. } => Some(Cutoff::Unbounded),
        Window::Range { .. } => {
            // cosh² 2r = A²(G − B²)/(Gε), written as an excess over 1.
            let excess_sq = (g * g - a * a * b * b) / (g * eps);
            let y = (1.0 + excess_sq).max(0.0).sqrt();
            Some(Cutoff::Finite(r_from_cosh2_excess(excess_sq / (y + 1.0))))
        }
    };

    // Equal-weight variance A cosh 2r − √G sinh 2r < 1 in t = tanh r.
    let sg = g.sqrt();
    let disc = g - a * a + 1.0;
    let squeezing = if disc < 0.0 {
        Window::Empty
    } else {
        let sd = disc.sqrt();
        Window::Range {
            lower: ((a - 1.0) / (sg + sd)).atanh(),
            upper: Cutoff::from_tanh((sg + sd) / (a + 1.0), 1.0),
        }
    };
    let r_max_sq = Cutoff::from_tanh(sg / a, 2.0);
    let zeta = (b * p.overlap.l_f / (a * p.overlap.k_f)).atan();

    Ok(ThermalCriticalPoints { entanglement, r_max_en, squeezing, r_max_sq, zeta })
}

/// Weight ratio `μ_I/μ_S` of the maximally squeezed hybrid quadrature.
pub fn weight_ratio(p: &ThermalParams) -> Result<f64> {
    p.validate()?;
    if p.r == 0.0 {
        return Err(Error::Uncorrelated);
    }
    let cs = (2.0 * p.r).sinh() * p.g().sqrt();
    if cs == 0.0 {
        return Err(Error::Uncorrelated);
    }
    let b = p.b();
    let h = cs.hypot(b);
    Ok(if b <= 0.0 { (h - b) / cs } else { cs / (h + b) })
}

/// Hybrid variance at the optimal phase and weights.
pub fn optimized_squeezing_closed(p: &ThermalParams) -> f64 {
    let sh = (2.0 * p.r).sinh();
    let b = p.b();
    p.a() * (2.0 * p.r).cosh() - (sh * sh * p.g() + b * b).sqrt()
}
