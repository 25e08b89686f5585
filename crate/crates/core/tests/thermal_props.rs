mod common;

use std::f64::consts::{PI, TAU};

use common::*;
use ftms_core::filters::OverlapFactors;
use ftms_core::gaussian::{build_covariance, optimal_weight_ratio, optimized_squeezing, quadrature_variance, QuadratureSpec};
use ftms_core::optim::golden_section_min;
use ftms_core::thermal::{self, ThermalParams, Window};
use ftms_core::tmsv::{self, TmsvParams};
use ftms_core::Cutoff;
use proptest::prelude::*;
use rand::Rng;

fn params(r: f64, ni: f64, ns: f64, k: f64, l: f64) -> ThermalParams {
    ThermalParams::new(r, ni, ns, OverlapFactors::new(k, l).unwrap()).unwrap()
}

/// Equal-weight hybrid variance at the optimal phase.
fn balanced_variance(p: &ThermalParams) -> f64 {
    let b = p.covariance();
    0.5 * (b.d_i + b.d_s) - b.correlation_sq().sqrt()
}

#[test]
fn window_is_exact() {
    let mut rng = rng(30);
    let mut tested = 0;
    while tested < 50 {
        let p = random_thermal(&mut rng);
        let cp = thermal::critical_points(&p).unwrap();
        let Window::Range { lower, upper } = cp.entanglement else { continue };
        tested += 1;
        let hi = if upper.is_finite() { 1.5 * upper.value() } else { 4.0 };
        for j in 0..200 {
            let r = hi * (j as f64 + 0.5) / 200.0;
            let margin = (r - lower).abs().min((r - upper.value()).abs());
            if margin < 1e-7 {
                continue;
            }
            let en = e_n(&p.with_r(r).covariance());
            if cp.entanglement.contains(r) {
                assert!(en > 0.0, "{p:?} r={r}");
            } else {
                assert_eq!(en, 0.0, "{p:?} r={r}");
            }
        }
    }
}

#[test]
fn window_shrinks_with_heat() {
    for (k, l) in [(0.95, 0.095), (0.9, 0.3), (0.99, 0.0)] {
        for ns in [0.0, 0.3, 1.0] {
            let mut prev: Option<(f64, f64)> = None;
            for j in 0..=40 {
                let cp = thermal::critical_points(&params(0.0, 0.05 * j as f64, ns, k, l)).unwrap();
                let Window::Range { lower, upper } = cp.entanglement else {
                    // Once the window closes it stays closed.
                    prev = Some((f64::INFINITY, f64::NEG_INFINITY));
                    continue;
                };
                if let Some((pl, pu)) = prev {
                    assert!(lower >= pl - 1e-12, "lower edge fell (k={k}, n_s={ns}, step {j})");
                    assert!(upper.value() <= pu + 1e-12, "upper edge rose (k={k}, n_s={ns}, step {j})");
                }
                prev = Some((lower, upper.value()));
            }
        }
    }
}

#[test]
fn optimal_phase_is_pi_minus_zeta() {
    let mut rng = rng(31);
    for _ in 0..50 {
        let mut p = random_thermal(&mut rng);
        p.r = rng.random_range(0.1..2.0);
        let zeta = thermal::critical_points(&p).unwrap().zeta;
        let v = build_covariance(&p.covariance()).unwrap();
        let f = |psi: f64| quadrature_variance(&v, &QuadratureSpec::balanced(psi)).unwrap();
        let (psi, _) = golden_section_min(f, PI - 1.5, PI + 1.5, 1e-12);
        let diff = (psi - (PI - zeta)).rem_euclid(TAU);
        assert!(diff.min(TAU - diff) <= 1e-6, "{psi} vs {}", PI - zeta);
    }
}

#[test]
fn equal_weight_minimum() {
    let mut rng = rng(32);
    for _ in 0..50 {
        let p = random_thermal(&mut rng);
        let cp = thermal::critical_points(&p).unwrap();
        let Cutoff::Finite(r_sq) = cp.r_max_sq else { continue };
        let numeric = argmax(|r| -balanced_variance(&p.with_r(r)), 0.0, 8.0);
        assert!((r_sq - numeric).abs() <= 1e-5, "{r_sq} vs {numeric}");
        // The optimized variance bottoms out where E_N peaks instead.
        if let Some(Cutoff::Finite(r_en)) = cp.r_max_en {
            let opt = argmax(|r| -thermal::optimized_squeezing_closed(&p.with_r(r)), 0.0, 8.0);
            assert!((r_en - opt).abs() <= 1e-5);
        }
    }
}

#[test]
fn equal_weight_cutoffs() {
    let mut rng = rng(33);
    for _ in 0..50 {
        let p = random_thermal(&mut rng);
        let cp = thermal::critical_points(&p).unwrap();
        let g = |r: f64| 1.0 - balanced_variance(&p.with_r(r));
        let found = roots(g, 1e-9, 6.0, 3000);
        match cp.squeezing {
            Window::Empty => assert!(found.is_empty()),
            Window::Range { lower, upper } => {
                let expected: Vec<f64> = [Some(lower), upper.is_finite().then(|| upper.value())]
                    .into_iter()
                    .flatten()
                    .filter(|&r| r > 1e-9 && r < 6.0)
                    .collect();
                assert_eq!(found.len(), expected.len(), "{p:?}");
                for (a, b) in found.iter().zip(&expected) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }
}

#[test]
fn reduces_to_vacuum_model() {
    for k in [0.3, 0.8, 0.95] {
        for l in [0.0, 0.2] {
            let th = params(0.0, 0.0, 0.0, k, l);
            let tm = TmsvParams::new(0.0, 1.0, 1.0, OverlapFactors::new(k, l).unwrap()).unwrap();
            let (a, b) = (thermal::critical_points(&th).unwrap(), tmsv::critical_points(&tm).unwrap());
            assert_eq!(a.entanglement.lower(), Some(0.0));
            assert!((a.entanglement.upper().unwrap().value() - b.r_ucf_en.value()).abs() < 1e-12);
            assert!((a.r_max_en.unwrap().value() - b.r_max_en.value()).abs() < 1e-12);
            assert!((a.r_max_sq.value() - b.r_max_sq.value()).abs() < 1e-12);
            assert_eq!(a.zeta, 0.0);
            for r in [0.3, 1.1, 2.0] {
                let (x, y) = (th.with_r(r), tm.with_r(r));
                assert!((thermal::optimized_squeezing_closed(&x) - tmsv::optimized_squeezing_closed(&y)).abs() < 1e-12);
                assert!((thermal::weight_ratio(&x).unwrap() - tmsv::weight_ratio(&y).unwrap()).abs() < 1e-12);
                let (bx, by) = (x.covariance(), y.covariance());
                assert!((bx.d_i - by.d_i).abs() < 1e-12 && (bx.d_s - by.d_s).abs() < 1e-12);
                assert!((bx.c11 - by.c11).abs() < 1e-12 && bx.c12 == 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_match_general_machinery(
        r in 0.0..2.5f64, ni in 0.0..2.0f64, ns in 0.0..2.0f64, k in 0.05..=1.0f64, u in -1.0..=1.0f64,
    ) {
        let p = params(r, ni, ns, k, u * (1.0 - k * k).sqrt());
        let b = p.covariance();
        prop_assert!((thermal::optimized_squeezing_closed(&p) - optimized_squeezing(&b)).abs() <= 1e-12 * b.d_i.max(b.d_s));
        if r > 0.0 {
            prop_assert!((thermal::weight_ratio(&p).unwrap() - optimal_weight_ratio(&b).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn boundary_has_unit_variance(ni in 0.0..1.5f64, ns in 0.0..1.5f64, k in 0.5..=1.0f64, u in -1.0..=1.0f64) {
        let p = params(0.0, ni, ns, k, u * (1.0 - k * k).sqrt());
        let cp = thermal::critical_points(&p).unwrap();
        if let Window::Range { lower, upper } = cp.entanglement {
            if lower > 0.0 {
                prop_assert!((thermal::optimized_squeezing_closed(&p.with_r(lower)) - 1.0).abs() <= 1e-8);
            }
            if let Cutoff::Finite(u) = upper {
                prop_assert!((thermal::optimized_squeezing_closed(&p.with_r(u)) - 1.0).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn weights_equalize_at_strong_drive(ni in 0.0..2.0f64, ns in 0.0..2.0f64, k in 0.05..=1.0f64) {
        let p = params(10.0, ni, ns, k, 0.0);
        prop_assert!((thermal::weight_ratio(&p).unwrap() - 1.0).abs() <= 1e-6);
    }
}
