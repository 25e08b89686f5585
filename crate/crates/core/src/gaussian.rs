//! Two-mode Gaussian state machinery.
//!
//! Covariance matrices are stored over the mode vector `(X_I, Y_I, X_S, Y_S)`
//! with the global ½ prefactor included, so the vacuum is `½·I₄` and the
//! standard quantum limit of a normalized quadrature is 1.
//!
//! All states produced by the filtered models share the block form
//!
//! ```text
//!       ⎡ D_I   0    C11   C12 ⎤
//!   ½ · ⎢  0   D_I   C12  −C11 ⎥
//!       ⎢ C11  C12   D_S    0  ⎥
//!       ⎣ C12 −C11    0    D_S ⎦
//! ```
//!
//! which [`CovarianceBlocks`] stores as four numbers.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector4};

use crate::error::{finite, Error, Result};

/// Slack below ½ tolerated on the smallest symplectic eigenvalue.
pub const PHYSICAL_TOL: f64 = 1e-10;

/// The four independent numbers of a block-structured two-mode covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceBlocks {
    pub d_i: f64,
    pub d_s: f64,
    pub c11: f64,
    pub c12: f64,
}

impl CovarianceBlocks {
    pub const VACUUM: Self = Self { d_i: 1.0, d_s: 1.0, c11: 0.0, c12: 0.0 };

    pub fn new(d_i: f64, d_s: f64, c11: f64, c12: f64) -> Self {
        Self { d_i, d_s, c11, c12 }
    }

    /// `C11² + C12²`, the squared magnitude of the inter-mode correlation.
    pub fn correlation_sq(&self) -> f64 {
        self.c11 * self.c11 + self.c12 * self.c12
    }

    fn check_finite(&self) -> Result<()> {
        finite("d_i", self.d_i)?;
        finite("d_s", self.d_s)?;
        finite("c11", self.c11)?;
        finite("c12", self.c12)?;
        Ok(())
    }
}

/// A symmetric, positive-definite 4×4 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    m: Matrix4<f64>,
}

/// Smallest symplectic eigenvalue of the partial transpose and the
/// logarithmic negativity derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementResult {
    pub nu_minus: f64,
    pub e_n: f64,
}

/// Phases and weights of a hybrid two-mode quadrature
/// `(μ_I x_I(φ_I) + μ_S x_S(φ_S)) / √(μ_I² + μ_S²)`
/// with `x(φ) = cos φ·X + sin φ·Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub phi_i: f64,
    pub phi_s: f64,
    pub mu_i: f64,
    pub mu_s: f64,
}

impl QuadratureSpec {
    pub fn new(phi_i: f64, phi_s: f64, mu_i: f64, mu_s: f64) -> Result<Self> {
        let q = Self { phi_i, phi_s, mu_i, mu_s };
        q.validate()?;
        Ok(q)
    }

    /// Equal weights with the whole phase on the idler.
    pub fn balanced(phase_sum: f64) -> Self {
        Self { phi_i: phase_sum, phi_s: 0.0, mu_i: 1.0, mu_s: 1.0 }
    }

    /// Weight ratio `μ_I/μ_S` with the whole phase on the idler.
    pub fn with_ratio(phase_sum: f64, ratio: f64) -> Result<Self> {
        Self::new(phase_sum, 0.0, ratio, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        finite("phi_i", self.phi_i)?;
        finite("phi_s", self.phi_s)?;
        for (name, mu) in [("mu_i", self.mu_i), ("mu_s", self.mu_s)] {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(Error::InvalidParameter { name, value: mu, reason: "weights must be finite and > 0" });
            }
        }
        Ok(())
    }
}

impl CovarianceMatrix {
    /// Wraps a raw matrix after checking symmetry (1e-12, relative to the
    /// largest entry) and positive definiteness.
    pub fn from_matrix(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("covariance entry"));
        }
        let scale = m.amax().max(1.0);
        for i in 0..4 {
            for j in (i + 1)..4 {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::NonPhysical(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        if m.cholesky().is_none() {
            return Err(Error::NonPhysical("not positive definite".into()));
        }
        Ok(Self { m })
    }

    pub fn vacuum() -> Self {
        Self { m: Matrix4::identity() * 0.5 }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }

    /// Reads the block parameters back out of the matrix. Only meaningful
    /// when [`has_block_structure`](Self::has_block_structure) holds.
    pub fn blocks(&self) -> CovarianceBlocks {
        let m = &self.m;
        CovarianceBlocks {
            d_i: m[(0, 0)] + m[(1, 1)],
            d_s: m[(2, 2)] + m[(3, 3)],
            c11: m[(0, 2)] - m[(1, 3)],
            c12: m[(0, 3)] + m[(1, 2)],
        }
    }

    pub fn has_block_structure(&self, tol: f64) -> bool {
        let rebuilt = block_matrix(&self.blocks());
        (rebuilt - self.m).amax() <= tol * self.m.amax().max(1.0)
    }

    /// Symplectic eigenvalues `(ν₋, ν₊)` of the matrix itself.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let (a, b, c) = self.sub_blocks();
        let delta = a.determinant() + b.determinant() + 2.0 * c.determinant();
        symplectic_pair(delta, self.det())
    }

    /// Uncertainty principle in Williamson form: `ν₋ ≥ ½` (with slack).
    pub fn is_physical(&self) -> bool {
        self.symplectic_eigenvalues().0 >= 0.5 - PHYSICAL_TOL
    }

    fn sub_blocks(&self) -> (Matrix2<f64>, Matrix2<f64>, Matrix2<f64>) {
        let m = &self.m;
        let a = m.fixed_view::<2, 2>(0, 0).into_owned();
        let b = m.fixed_view::<2, 2>(2, 2).into_owned();
        let c = m.fixed_view::<2, 2>(0, 2).into_owned();
        (a, b, c)
    }
}

/// Roots of `ν⁴ − Δ ν² + det = 0`, ordered. Uses the product form for the
/// small root to avoid cancellation.
fn symplectic_pair(delta: f64, det: f64) -> (f64, f64) {
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let big_sq = 0.5 * (delta + disc);
    let small_sq = if big_sq > 0.0 { det / big_sq } else { 0.0 };
    (small_sq.max(0.0).sqrt(), big_sq.max(0.0).sqrt())
}

fn block_matrix(b: &CovarianceBlocks) -> Matrix4<f64> {
    #[rustfmt::skip]
    let m = Matrix4::new(
        b.d_i, 0.0,    b.c11,  b.c12,
        0.0,   b.d_i,  b.c12, -b.c11,
        b.c11, b.c12,  b.d_s,  0.0,
        b.c12, -b.c11, 0.0,    b.d_s,
    );
    m * 0.5
}

/// Assembles the covariance matrix from its block parameters.
pub fn build_covariance(blocks: &CovarianceBlocks) -> Result<CovarianceMatrix> {
    blocks.check_finite()?;
    CovarianceMatrix::from_matrix(block_matrix(blocks))
}

/// Logarithmic negativity from the smallest symplectic eigenvalue of the
/// partially transposed covariance matrix,
/// `ν₋² = (Σ − √(Σ² − 4 det V))/2` with `Σ = det V_I + det V_S − 2 det V_corr`.
pub fn log_negativity(v: &CovarianceMatrix) -> Result<EntanglementResult> {
    let (a, b, c) = v.sub_blocks();
    let sigma = a.determinant() + b.determinant() - 2.0 * c.determinant();
    let det = v.det();
    let radicand = sigma * sigma - 4.0 * det;
    if radicand < -PHYSICAL_TOL {
        return Err(Error::NonPhysical(format!("Σ² − 4 det V = {radicand:e}")));
    }
    let (nu_minus, _) = symplectic_pair(sigma, det);
    let e_n = (-(2.0 * nu_minus).ln()).max(0.0);
    Ok(EntanglementResult { nu_minus, e_n })
}

/// Purity `Tr ρ² = 1/|C11² + C12² − D_I D_S|`, checked against the general
/// Gaussian expression `1/(4√det V)`.
pub fn purity(v: &CovarianceMatrix) -> Result<f64> {
    let b = v.blocks();
    let q = (b.correlation_sq() - b.d_i * b.d_s).abs();
    if q < 1e-14 {
        return Err(Error::NonPhysical("degenerate block determinant".into()));
    }
    let closed = 1.0 / q;
    let general = 1.0 / (4.0 * v.det().sqrt());
    if (closed - general).abs() > 1e-10 * closed.max(1.0) {
        return Err(Error::NonPhysical(format!(
            "purity mismatch ({closed} vs {general}); matrix lacks the filtered block form"
        )));
    }
    Ok(closed)
}

/// Wigner function of a zero-mean Gaussian state, prepared for repeated
/// evaluation.
#[derive(Debug, Clone)]
pub struct GaussianWigner {
    inv: Matrix4<f64>,
    norm: f64,
}

impl GaussianWigner {
    pub fn new(v: &CovarianceMatrix) -> Result<Self> {
        let det = v.det();
        if !(det > 0.0) {
            return Err(Error::Singular);
        }
        let inv = v.m.try_inverse().ok_or(Error::Singular)?;
        Ok(Self { inv, norm: 1.0 / (PI * PI * det.sqrt()) })
    }

    /// `W(u) = exp(−½ uᵀV⁻¹u) / (π² √det V)`.
    pub fn eval(&self, u: &[f64; 4]) -> f64 {
        let u = Vector4::from_column_slice(u);
        let q = u.dot(&(self.inv * u));
        self.norm * (-0.5 * q).exp()
    }
}

pub fn wigner(v: &CovarianceMatrix, u: &[f64; 4]) -> Result<f64> {
    Ok(GaussianWigner::new(v)?.eval(u))
}

/// Frequency-flat loss on each arm: `V → E V E + (I − E²)/2` with
/// `E = diag(√η_I, √η_I, √η_S, √η_S)`.
pub fn apply_loss(v: &CovarianceMatrix, eta_i: f64, eta_s: f64) -> Result<CovarianceMatrix> {
    for (name, eta) in [("eta_i", eta_i), ("eta_s", eta_s)] {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter { name, value: eta, reason: "efficiency must lie in [0, 1]" });
        }
    }
    let e = Vector4::new(eta_i.sqrt(), eta_i.sqrt(), eta_s.sqrt(), eta_s.sqrt());
    let mut m = v.m;
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] *= e[i] * e[j];
        }
        m[(i, i)] += 0.5 * (1.0 - e[i] * e[i]);
    }
    CovarianceMatrix::from_matrix(m)
}

/// Variance of the hybrid quadrature, normalized so the vacuum gives 1.
pub fn quadrature_variance(v: &CovarianceMatrix, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    let scale = q.mu_i.max(q.mu_s);
    let (mi, ms) = (q.mu_i / scale, q.mu_s / scale);
    let norm = (mi * mi + ms * ms).sqrt();
    let g = Vector4::new(
        mi * q.phi_i.cos(),
        mi * q.phi_i.sin(),
        ms * q.phi_s.cos(),
        ms * q.phi_s.sin(),
    ) / norm;
    Ok(2.0 * g.dot(&(v.m * g)))
}

/// Phase sum `φ_I + φ_S` in `[0, 2π)` that minimizes the hybrid variance.
pub fn optimal_phase_sum(blocks: &CovarianceBlocks) -> f64 {
    (PI + blocks.c12.atan2(blocks.c11)).rem_euclid(2.0 * PI)
}

/// Squeezing angle `ζ = arctan(−C12/C11)` in `(−π/2, π/2]`; the optimal
/// phase sum is `π − ζ` whenever `C11 > 0`.
pub fn squeezing_angle(blocks: &CovarianceBlocks) -> f64 {
    if blocks.c11 == 0.0 {
        return if blocks.c12 == 0.0 { 0.0 } else { -blocks.c12.signum() * PI / 2.0 };
    }
    let z = (-blocks.c12 / blocks.c11).atan();
    if z <= -PI / 2.0 {
        PI / 2.0
    } else {
        z
    }
}

/// Weight ratio `μ_I/μ_S` minimizing the hybrid variance at the optimal phase.
pub fn optimal_weight_ratio(blocks: &CovarianceBlocks) -> Result<f64> {
    blocks.check_finite()?;
    let c2 = blocks.correlation_sq();
    if c2 == 0.0 {
        return Err(Error::Uncorrelated);
    }
    let c = c2.sqrt();
    let diff = blocks.d_s - blocks.d_i;
    let root = (4.0 * c2 + diff * diff).sqrt();
    // Two algebraically equal forms; pick the one without cancellation.
    Ok(if diff >= 0.0 { (diff + root) / (2.0 * c) } else { 2.0 * c / (root - diff) })
}

/// Minimum of the hybrid variance over phases and weights:
/// `½(D_I + D_S − √(4C11² + 4C12² + (D_I − D_S)²))`.
pub fn optimized_squeezing(blocks: &CovarianceBlocks) -> f64 {
    let diff = blocks.d_i - blocks.d_s;
    0.5 * (blocks.d_i + blocks.d_s - (4.0 * blocks.correlation_sq() + diff * diff).sqrt())
}
