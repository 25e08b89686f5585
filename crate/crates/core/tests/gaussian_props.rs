mod common;

use common::*;
use ftms_core::gaussian::*;
use ftms_core::thermal::ThermalParams;
use ftms_core::tmsv::TmsvParams;
use ftms_core::filters::OverlapFactors;
use proptest::prelude::*;
use rand::Rng;

fn arb_tmsv() -> impl Strategy<Value = TmsvParams> {
    (0.0..3.0f64, 0.01..=1.0f64, 0.01..=1.0f64, -1.0..=1.0f64)
        .prop_map(|(r, ei, es, k)| TmsvParams::new(r, ei, es, OverlapFactors::new(k, 0.0).unwrap()).unwrap())
}

fn arb_thermal() -> impl Strategy<Value = ThermalParams> {
    (0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64, 0.0..=1.0f64, -1.0..=1.0f64).prop_map(|(r, ni, ns, k, u)| {
        let l = u * (1.0 - k * k).sqrt();
        ThermalParams::new(r, ni, ns, OverlapFactors::new(k, l).unwrap()).unwrap()
    })
}

fn check_physical(b: &CovarianceBlocks) {
    let v = build_covariance(b).unwrap();
    let (nu, _) = v.symplectic_eigenvalues();
    assert!(nu >= 0.5 - PHYSICAL_TOL, "ν = {nu}");
    assert!(v.is_physical());
    assert!(b.d_i >= 1.0 - 1e-12 && b.d_s >= 1.0 - 1e-12);
}

fn check_spectra(b: &CovarianceBlocks) {
    let v = build_covariance(b).unwrap();
    let scale = b.d_i.max(b.d_s);
    let (lo, hi) = v.symplectic_eigenvalues();
    let [o_lo, o_hi] = symplectic_spectrum(v.matrix());
    assert!((lo - o_lo).abs() < 1e-9 * scale && (hi - o_hi).abs() < 1e-9 * scale);
    let [pt_lo, _] = symplectic_spectrum(&partial_transpose(v.matrix()));
    let nu = log_negativity(&v).unwrap().nu_minus;
    assert!((nu - pt_lo).abs() < 1e-9 * scale, "{nu} vs {pt_lo}");
}

proptest! {
    #[test]
    fn vacuum_model_states_are_physical(p in arb_tmsv()) {
        check_physical(&p.covariance());
    }

    #[test]
    fn thermal_states_are_physical(p in arb_thermal()) {
        check_physical(&p.covariance());
    }

    #[test]
    fn symplectic_values_match_eigen_oracle(p in arb_thermal()) {
        check_spectra(&p.covariance());
    }

    #[test]
    fn lossy_symplectic_values_match_eigen_oracle(p in arb_tmsv()) {
        check_spectra(&p.covariance());
    }

    #[test]
    fn variance_ignores_weight_scale(p in arb_thermal(), phi_i in -4.0..4.0f64, phi_s in -4.0..4.0f64, mu in 0.05..20.0f64) {
        let v = build_covariance(&p.covariance()).unwrap();
        let base = quadrature_variance(&v, &QuadratureSpec::new(phi_i, phi_s, mu, 1.0).unwrap()).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let q = QuadratureSpec::new(phi_i, phi_s, c * mu, c).unwrap();
            prop_assert!((quadrature_variance(&v, &q).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn variance_matches_expansion(p in arb_thermal(), phi_i in -4.0..4.0f64, phi_s in -4.0..4.0f64, mi in 0.1..5.0f64, ms in 0.1..5.0f64) {
        let b = p.covariance();
        let v = build_covariance(&b).unwrap();
        let got = quadrature_variance(&v, &QuadratureSpec::new(phi_i, phi_s, mi, ms).unwrap()).unwrap();
        let psi = phi_i + phi_s;
        let expected = (mi * mi * b.d_i + ms * ms * b.d_s + 2.0 * mi * ms * (psi.cos() * b.c11 + psi.sin() * b.c12)) / (mi * mi + ms * ms);
        prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn vacuum_variance_is_one(phi_i in -4.0..4.0f64, phi_s in -4.0..4.0f64, mi in 0.01..100.0f64, ms in 0.01..100.0f64) {
        let q = QuadratureSpec::new(phi_i, phi_s, mi, ms).unwrap();
        prop_assert!((quadrature_variance(&CovarianceMatrix::vacuum(), &q).unwrap() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn purity_consistency_on_random_states() {
    let mut rng = rng(7);
    for k in 0..1000 {
        let b = if k % 2 == 0 { random_tmsv(&mut rng).covariance() } else { random_thermal(&mut rng).covariance() };
        let v = build_covariance(&b).unwrap();
        let p = purity(&v).unwrap();
        assert!((p - 1.0 / (4.0 * v.det().sqrt())).abs() <= 1e-10, "{b:?}");
        assert!(p > 0.0 && p <= 1.0 + 1e-12);
    }
}

#[test]
fn loss_map_matches_lossy_blocks() {
    let mut rng = rng(8);
    for _ in 0..100 {
        let r = rng.random_range(0.0..2.0);
        let k = rng.random_range(-1.0..=1.0);
        let (ei, es) = (rng.random_range(0.01..=1.0), rng.random_range(0.01..=1.0));
        let o = OverlapFactors::new(k, 0.0).unwrap();
        let lossless = build_covariance(&TmsvParams::new(r, 1.0, 1.0, o).unwrap().covariance()).unwrap();
        let direct = build_covariance(&TmsvParams::new(r, ei, es, o).unwrap().covariance()).unwrap();
        let mapped = apply_loss(&lossless, ei, es).unwrap();
        let scale = direct.matrix().amax();
        assert!((mapped.matrix() - direct.matrix()).amax() <= 1e-12 * scale);
    }
}

#[test]
fn full_loss_gives_vacuum() {
    let v = build_covariance(&TmsvParams::new(1.2, 1.0, 1.0, OverlapFactors::IDENTICAL).unwrap().covariance()).unwrap();
    assert_eq!(apply_loss(&v, 0.0, 0.0).unwrap(), CovarianceMatrix::vacuum());
    assert_eq!(apply_loss(&v, 1.0, 1.0).unwrap(), v);
    assert!(apply_loss(&v, 1.1, 0.5).is_err());
}

#[test]
fn minimizer_is_sound() {
    let mut rng = rng(9);
    for k in 0..20 {
        let b = if k % 2 == 0 { random_tmsv(&mut rng).covariance() } else { random_thermal(&mut rng).covariance() };
        if b.correlation_sq() == 0.0 {
            continue;
        }
        let v = build_covariance(&b).unwrap();
        let best = optimized_squeezing(&b);
        let mut sampled = f64::INFINITY;
        for _ in 0..10_000 {
            let q = QuadratureSpec::new(
                rng.random_range(-3.2..3.2),
                rng.random_range(-3.2..3.2),
                rng.random_range(0.01..1.0),
                rng.random_range(0.01..1.0),
            )
            .unwrap();
            sampled = sampled.min(quadrature_variance(&v, &q).unwrap());
        }
        assert!(best <= sampled + 1e-12, "{best} > {sampled}");
        let at = QuadratureSpec::with_ratio(optimal_phase_sum(&b), optimal_weight_ratio(&b).unwrap()).unwrap();
        assert!((quadrature_variance(&v, &at).unwrap() - best).abs() <= 1e-9 * best.max(1.0));
    }
}

/// Nodes and weights of n-point Gauss–Legendre on [−1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

#[test]
fn wigner_integrates_to_one() {
    let gl = gauss_legendre(16);
    let mut rng = rng(10);
    for _ in 0..10 {
        let p = ThermalParams::new(
            rng.random_range(0.0..0.4),
            rng.random_range(0.0..0.5),
            rng.random_range(0.0..0.5),
            random_overlap(&mut rng, 0.5),
        )
        .unwrap();
        let v = build_covariance(&p.covariance()).unwrap();
        let w = GaussianWigner::new(&v).unwrap();
        // Composite rule: 4 panels per axis over [−8σ, 8σ].
        let axis = |s: f64| -> Vec<(f64, f64)> {
            let (lo, width) = (-8.0 * s, 4.0 * s);
            (0..4)
                .flat_map(|k| {
                    let c = lo + width * (k as f64 + 0.5);
                    gl.iter().map(move |&(x, wt)| (c + 0.5 * width * x, 0.5 * width * wt))
                })
                .collect()
        };
        let axes: Vec<Vec<(f64, f64)>> = (0..4).map(|i| axis(v.matrix()[(i, i)].sqrt())).collect();
        let (mut total, mut square) = (0.0, 0.0);
        for &(a, wa) in &axes[0] {
            for &(b, wb) in &axes[1] {
                for &(c, wc) in &axes[2] {
                    for &(d, wd) in &axes[3] {
                        let x = w.eval(&[a, b, c, d]);
                        total += wa * wb * wc * wd * x;
                        square += wa * wb * wc * wd * x * x;
                    }
                }
            }
        }
        // The density is normalized against d²α_I d²α_S with d²α = dq dp / 2.
        assert!((0.25 * total - 1.0).abs() < 1e-4, "∫W d⁴u / 4 = {}", 0.25 * total);
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((0.25 * pi2 * square - purity(&v).unwrap()).abs() < 1e-4);
    }
}

#[test]
fn entanglement_iff_sub_half() {
    let mut rng = rng(11);
    for _ in 0..500 {
        let b = random_thermal(&mut rng).covariance();
        let e = log_negativity(&build_covariance(&b).unwrap()).unwrap();
        assert!(e.e_n >= 0.0);
        assert_eq!(e.e_n > 0.0, e.nu_minus < 0.5);
        if e.e_n > 0.0 {
            assert!((e.e_n + (2.0 * e.nu_minus).ln()).abs() < 1e-14);
        }
    }
}

#[test]
fn non_block_matrix_rejected_by_purity() {
    let mut m = *CovarianceMatrix::vacuum().matrix();
    m[(0, 0)] = 0.8;
    let v = CovarianceMatrix::from_matrix(m).unwrap();
    assert!(!v.has_block_structure(1e-12));
    assert!(purity(&v).is_err());
}
