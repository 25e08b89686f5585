//! Adaptive Gauss–Kronrod (7/15) quadrature over finite intervals.
//!
//! Works for any value type that forms a vector space over `f64` and has a
//! norm, so real and complex integrands share one implementation.

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integrand values the integrator can accumulate.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn norm(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn norm(self) -> f64 {
        Complex64::norm(self)
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_9,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];

// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

/// One 15-point Kronrod panel: (integral, error estimate).
fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod = kronrod + pair * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let result = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (result, err)
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Settings for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Maximum number of panels before giving up.
    pub max_intervals: usize,
    /// Equal-width panels each breakpoint interval is split into before
    /// adaptation starts (useful for oscillatory integrands).
    pub initial_pieces: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_intervals: 20_000,
            initial_pieces: 1,
        }
    }
}

/// Integration outcome.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Integrates `f` over the piecewise interval given by sorted `breakpoints`
/// (at least two), bisecting the worst panel until the summed error estimate
/// drops below `opts.abs_tol`.
pub fn integrate<T, F>(f: F, breakpoints: &[f64], opts: QuadOptions) -> Result<Quadrature<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if breakpoints.len() < 2 {
        return Err(Error::InvalidConfig(
            "quadrature needs at least two breakpoints".into(),
        ));
    }
    let mut heap = BinaryHeap::new();
    let pieces = opts.initial_pieces.max(1);
    for w in breakpoints.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        let step = (hi - lo) / pieces as f64;
        for k in 0..pieces {
            let a = lo + step * k as f64;
            let b = if k + 1 == pieces { hi } else { lo + step * (k + 1) as f64 };
            let (value, err) = gk15(&f, a, b);
            heap.push(Panel { a, b, value, err });
        }
    }
    let total = |heap: &BinaryHeap<Panel<T>>| {
        heap.iter().fold((T::zero(), 0.0), |(v, e), p| (v + p.value, e + p.err))
    };
    let (mut value, mut err) = total(&heap);
    while err > opts.abs_tol {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNotConverged {
                intervals: heap.len(),
                error_estimate: err,
            });
        }
        let worst = heap.pop().expect("non-empty panel set");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split further in floating point.
            return Err(Error::QuadratureNotConverged {
                intervals: heap.len() + 1,
                error_estimate: err,
            });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        value = value - worst.value + v1 + v2;
        err = err - worst.err + e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        // Re-sum periodically so running updates don't drift.
        if heap.len() % 64 == 0 {
            (value, err) = total(&heap);
        }
    }
    let (value, err) = total(&heap);
    Ok(Quadrature {
        value,
        error_estimate: err,
        intervals: heap.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x: f64| x.powi(6) - 3.0 * x, &[0.0, 2.0], QuadOptions::default()).unwrap();
        assert!((q.value - (128.0 / 7.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex_integrand() {
        // ∫_0^50 e^{i 7 t} dt = (e^{350 i} - 1)/(7 i)
        let q = integrate(
            |t: f64| Complex64::new(0.0, 7.0 * t).exp(),
            &[0.0, 50.0],
            QuadOptions { abs_tol: 1e-12, ..Default::default() },
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 350.0).exp() - 1.0) / Complex64::new(0.0, 7.0);
        assert!((q.value - exact).norm() < 1e-11);
    }

    #[test]
    fn discontinuity_at_breakpoint() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { 0.0 };
        let q = integrate(f, &[0.0, 1.0, 3.0], QuadOptions::default()).unwrap();
        assert!((q.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reports_budget_exhaustion() {
        let err = integrate(
            |x: f64| (1.0 / x).sin(),
            &[1e-9, 1.0],
            QuadOptions { abs_tol: 1e-14, max_intervals: 50, initial_pieces: 1 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }
}
