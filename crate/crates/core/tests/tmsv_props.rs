mod common;

use common::*;
use ftms_core::filters::OverlapFactors;
use ftms_core::gaussian::{optimal_weight_ratio, optimized_squeezing};
use ftms_core::tmsv::*;
use ftms_core::Cutoff;
use proptest::prelude::*;

fn params(r: f64, ei: f64, es: f64, k: f64) -> TmsvParams {
    TmsvParams::new(r, ei, es, OverlapFactors::new(k, 0.0).unwrap()).unwrap()
}

/// Equal-weight hybrid variance at phase sum π.
fn balanced_variance(p: &TmsvParams) -> f64 {
    let b = p.covariance();
    0.5 * (b.d_i + b.d_s) - b.c11
}

const ETAS: [f64; 3] = [0.6, 0.9, 1.0];

#[test]
fn entanglement_is_bell_shaped() {
    for k in [0.5, 0.8, 0.95, 0.99] {
        for (ei, es) in [(1.0, 1.0), (0.9, 0.98), (0.6, 1.0)] {
            let p = params(0.0, ei, es, k);
            let cut = critical_points(&p).unwrap().r_ucf_en.value();
            let en: Vec<f64> = (0..400).map(|j| e_n(&p.with_r(1.2 * cut * j as f64 / 399.0).covariance())).collect();
            let peak = en.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
            assert!(peak > 0 && en[peak] > 0.0);
            for w in en[..=peak].windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "not rising before the peak (k={k})");
            }
            for w in en[peak..].windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "second maximum after the peak (k={k})");
            }
            assert_eq!(*en.last().unwrap(), 0.0);
        }
    }
}

#[test]
fn cutoff_is_exact_and_loss_independent() {
    for k in [0.5, 0.8, 0.95] {
        let reference = critical_points(&params(0.0, 1.0, 1.0, k)).unwrap().r_ucf_en.value();
        for ei in ETAS {
            for es in ETAS {
                let p = params(0.0, ei, es, k);
                let cut = critical_points(&p).unwrap().r_ucf_en.value();
                assert!((cut - reference).abs() <= 1e-9);
                assert!(e_n(&p.with_r(cut * (1.0 - 1e-6)).covariance()) > 0.0);
                assert_eq!(e_n(&p.with_r(cut * (1.0 + 1e-6)).covariance()), 0.0);
            }
        }
    }
}

#[test]
fn entanglement_drops_with_loss() {
    for k in [0.6, 0.9, 1.0] {
        for r in [0.2, 0.7, 1.5] {
            let etas: Vec<f64> = (1..=20).map(|j| j as f64 / 20.0).collect();
            for &fixed in &etas {
                let row: Vec<f64> = etas.iter().map(|&e| e_n(&params(r, e, fixed, k).covariance())).collect();
                for w in row.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12);
                }
                let col: Vec<f64> = etas.iter().map(|&e| e_n(&params(r, fixed, e, k).covariance())).collect();
                for w in col.windows(2) {
                    assert!(w[1] >= w[0] - 1e-12);
                }
            }
        }
    }
}

#[test]
fn squeezing_and_entanglement_share_boundary() {
    for k in [0.3, 0.7, 0.95, 1.0] {
        for ei in ETAS {
            for es in ETAS {
                for j in 0..60 {
                    let p = params(0.05 * j as f64, ei, es, k);
                    let en = e_n(&p.covariance());
                    if en.abs() > 1e-9 {
                        assert!(optimized_squeezing_closed(&p) < 1.0);
                    } else if p.r > 0.0 {
                        assert!(optimized_squeezing_closed(&p) >= 1.0 - 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn unit_overlap_cutoffs_unbounded() {
    let cp = critical_points(&params(0.3, 0.9, 0.7, 1.0)).unwrap();
    assert_eq!(cp.r_ucf_en, Cutoff::Unbounded);
    assert_eq!(cp.r_max_en, Cutoff::Unbounded);
    // Unequal efficiencies keep the equal-weight optimum finite.
    assert!(cp.r_max_sq.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_forms_match_general_machinery(r in 0.0..2.5f64, ei in 0.05..=1.0f64, es in 0.05..=1.0f64, k in 0.05..=1.0f64) {
        let p = params(r, ei, es, k);
        let b = p.covariance();
        let s = optimized_squeezing_closed(&p);
        prop_assert!((s - optimized_squeezing(&b)).abs() <= 1e-12 * b.d_i.max(b.d_s));
        if r > 0.0 {
            prop_assert!((weight_ratio(&p).unwrap() - optimal_weight_ratio(&b).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn squeezed_iff_below_cutoff(r in 0.01..3.0f64, ei in 0.05..=1.0f64, es in 0.05..=1.0f64, k in 0.05..0.999f64) {
        let p = params(r, ei, es, k);
        let cut = critical_points(&p).unwrap().r_ucf_en.value();
        prop_assume!((r - cut).abs() > 1e-6);
        prop_assert_eq!(optimized_squeezing_closed(&p) < 1.0, r < cut);
    }

    #[test]
    fn ratio_at_cutoff(ei in 0.05..=1.0f64, es in 0.05..=1.0f64, k in 0.05..0.999f64) {
        let p = params(k.atanh(), ei, es, k);
        prop_assert!((weight_ratio(&p).unwrap() - (es / ei).sqrt()).abs() <= 1e-10);
        prop_assert!((optimized_squeezing_closed(&p) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn extrema_match_numeric(ei in 0.3..=1.0f64, es in 0.3..=1.0f64, k in 0.3..0.99f64) {
        let p = params(0.0, ei, es, k);
        let cp = critical_points(&p).unwrap();
        let cut = cp.r_ucf_en.value();
        let en_peak = argmax(|r| e_n(&p.with_r(r).covariance()), 0.0, cut);
        prop_assert!((cp.r_max_en.value() - en_peak).abs() <= 1e-5);
        let sq_peak = argmax(|r| -balanced_variance(&p.with_r(r)), 0.0, 6.0);
        prop_assert!((cp.r_max_sq.value() - sq_peak).abs() <= 1e-5);
        prop_assert_eq!(cp.r_ucf_sq.value(), 2.0 * cp.r_max_sq.value());
        if ei == es {
            prop_assert!((cp.r_max_en.value() - 0.5 * cut).abs() <= 1e-12);
        }
    }

    #[test]
    fn equal_weight_window_ends_at_twice_peak(ei in 0.3..=1.0f64, es in 0.3..=1.0f64, k in 0.3..0.99f64) {
        let p = params(0.0, ei, es, k);
        let end = critical_points(&p).unwrap().r_ucf_sq.value();
        prop_assert!((balanced_variance(&p.with_r(end)) - 1.0).abs() < 1e-9);
    }
}
