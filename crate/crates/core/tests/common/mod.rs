//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ftms_core::filters::OverlapFactors;
use ftms_core::gaussian::{build_covariance, log_negativity, quadrature_variance, CovarianceBlocks, QuadratureSpec};
use ftms_core::optim::{bisect, golden_section_min, nelder_mead, NelderMeadOptions};
use ftms_core::thermal::ThermalParams;
use ftms_core::tmsv::TmsvParams;
use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn e_n(b: &CovarianceBlocks) -> f64 {
    log_negativity(&build_covariance(b).unwrap()).unwrap().e_n
}

/// `½ − ν₋`: positive exactly when the state is entangled, and smooth
/// through the boundary (unlike the clamped `E_N`).
pub fn entanglement_margin(b: &CovarianceBlocks) -> f64 {
    0.5 - log_negativity(&build_covariance(b).unwrap()).unwrap().nu_minus
}

/// Symplectic eigenvalues from the spectrum of `ΩV`, sorted ascending.
pub fn symplectic_spectrum(m: &Matrix4<f64>) -> [f64; 2] {
    #[rustfmt::skip]
    let omega = Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        -1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
        0.0, 0.0, -1.0, 0.0,
    );
    let ev = (omega * m).complex_eigenvalues();
    let mut nu: Vec<f64> = ev.iter().map(|z| z.im.abs()).collect();
    nu.sort_by(f64::total_cmp);
    [nu[0], nu[2]]
}

/// Partial transpose: time reversal `Y_S → −Y_S` on the signal.
pub fn partial_transpose(m: &Matrix4<f64>) -> Matrix4<f64> {
    let p = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0, 1.0, -1.0));
    p * m * p
}

/// Minimizes the hybrid variance over (phase sum, weight ratio): a coarse
/// grid, Nelder–Mead, then coordinate-wise roots of central-difference
/// derivatives. Returns (variance, phase sum, ratio).
pub fn minimize_hybrid(b: &CovarianceBlocks) -> (f64, f64, f64) {
    let v = build_covariance(b).unwrap();
    let f = |psi: f64, lr: f64| {
        quadrature_variance(&v, &QuadratureSpec::with_ratio(psi, lr.exp()).unwrap()).unwrap()
    };
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..64 {
        for j in -30..=30 {
            let (psi, lr) = (i as f64 * std::f64::consts::TAU / 64.0, j as f64 * 0.1);
            let val = f(psi, lr);
            if val < best.0 {
                best = (val, psi, lr);
            }
        }
    }
    let r = nelder_mead(
        |x: &[f64]| f(x[0], x[1]),
        &[best.1, best.2],
        NelderMeadOptions { initial_step: 0.05, f_tol: 1e-15, max_evals: 4000 },
    );
    let (mut psi, mut lr) = (r.x[0], r.x[1]);
    let h = 1e-5;
    for _ in 0..3 {
        let dpsi = |p: f64| f(p + h, lr) - f(p - h, lr);
        psi = bisect(dpsi, psi - 0.01, psi + 0.01, 1e-14).unwrap_or(psi);
        let dlr = |l: f64| f(psi, l + h) - f(psi, l - h);
        lr = bisect(dlr, lr - 0.01, lr + 0.01, 1e-14).unwrap_or(lr);
    }
    (f(psi, lr), psi, lr.exp())
}

/// Maximizer of `g` on `[a, b]` by golden section.
pub fn argmax(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    golden_section_min(|x| -g(x), a, b, 1e-12).0
}

/// All sign changes of `g` on a uniform grid, refined by bisection.
pub fn roots(g: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    let mut out = Vec::new();
    for w in xs.windows(2) {
        if g(w[0]).signum() != g(w[1]).signum() {
            out.push(bisect(&g, w[0], w[1], 1e-15).unwrap());
        }
    }
    out
}

pub fn random_overlap(rng: &mut ChaCha8Rng, k_min: f64) -> OverlapFactors {
    let k: f64 = rng.random_range(k_min..1.0);
    let lmax = (1.0 - k * k).sqrt();
    OverlapFactors::new(k, rng.random_range(-lmax..=lmax)).unwrap()
}

pub fn random_tmsv(rng: &mut ChaCha8Rng) -> TmsvParams {
    let k: f64 = rng.random_range(0.3..0.99);
    TmsvParams::new(
        rng.random_range(0.0..2.0),
        rng.random_range(0.3..=1.0),
        rng.random_range(0.3..=1.0),
        OverlapFactors::new(k, 0.0).unwrap(),
    )
    .unwrap()
}

pub fn random_thermal(rng: &mut ChaCha8Rng) -> ThermalParams {
    let o = random_overlap(rng, 0.5);
    ThermalParams::new(rng.random_range(0.0..2.0), rng.random_range(0.0..1.5), rng.random_range(0.0..1.5), o).unwrap()
}
