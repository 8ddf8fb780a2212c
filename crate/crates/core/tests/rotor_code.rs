use std::f64::consts::PI;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use xyrotor::analysis::StiffnessPoint;
use xyrotor::exact_dual::{DualSumSpec, Method, bessel_i, stiffness_exact, z_exact};
use xyrotor::lattice::TorusLattice;
use xyrotor::rotor_code::*;

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

#[test]
fn pdf_is_normalized() {
    for sigma in [0.2, 0.5, 2.0] {
        // trapezoid on a periodic analytic integrand converges geometrically
        let n = 4096;
        let total: f64 = (0..n)
            .map(|j| von_mises_pdf(-PI + 2.0 * PI * j as f64 / n as f64, sigma).unwrap())
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        assert!((total - 1.0).abs() < 1e-10, "sigma {sigma}: {total}");
    }
}

#[test]
fn sampler_moments() {
    let mut r = rng(1);
    let n = 1_000_000;
    let (mut c, mut c2, mut s, mut s2) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let t = von_mises_sample(&mut r, 0.5).unwrap();
        assert!(t > -PI && t <= PI);
        c += t.cos();
        c2 += t.cos().powi(2);
        s += t.sin();
        s2 += t.sin().powi(2);
    }
    let nf = n as f64;
    let (mc, ms) = (c / nf, s / nf);
    let ec = ((c2 / nf - mc * mc) / nf).sqrt();
    let es = ((s2 / nf - ms * ms) / nf).sqrt();
    let expected = bessel_i(1, 2.0) / bessel_i(0, 2.0);
    assert!((mc - expected).abs() < 3.0 * ec, "{mc} vs {expected} ± {ec}");
    assert!(ms.abs() < 3.0 * es);
}

#[test]
fn sampler_concentrates_for_narrow_noise() {
    let mut r = rng(2);
    for _ in 0..10_000 {
        assert!(von_mises_sample(&mut r, 1e-3).unwrap().abs() < 0.2);
    }
    // wide noise is nearly uniform
    let wide: f64 = (0..100_000)
        .map(|_| von_mises_sample(&mut r, 1e12).unwrap().cos())
        .sum::<f64>()
        / 1e5;
    assert!(wide.abs() < 0.01);
}

#[test]
fn holonomies_of_trivial_errors_vanish() {
    let lat = TorusLattice::new(4).unwrap();
    let zero = holonomies(&lat, &vec![0.0; lat.num_edges()]);
    assert!(zero.faces.iter().chain(&zero.loops).all(|&h| h == 0.0));
    let mut errors = vec![0.0; lat.num_edges()];
    errors[5] = 2.0 * PI;
    let h = holonomies(&lat, &errors);
    for v in h.faces.iter().chain(&h.loops) {
        assert!(v.abs() < 1e-12 || (v.abs() - 2.0 * PI).abs() < 1e-12, "{v}");
    }
}

#[test]
fn face_holonomy_spread_follows_edge_noise() {
    let lat = TorusLattice::new(8).unwrap();
    let mut r = rng(3);
    let sigma = 0.05;
    // Var Θ of one edge by quadrature of the density
    let n = 4096;
    let var_edge: f64 = (0..n)
        .map(|j| {
            let t = -PI + 2.0 * PI * j as f64 / n as f64;
            t * t * von_mises_pdf(t, sigma).unwrap()
        })
        .sum::<f64>()
        * 2.0
        * PI
        / n as f64;
    let (mut sum2, mut count) = (0.0, 0.0);
    for _ in 0..100 {
        let s = syndrome_sample(&lat, sigma, &mut r).unwrap();
        sum2 += s.faces.iter().map(|h| h * h).sum::<f64>();
        count += s.faces.len() as f64;
    }
    let ratio = sum2 / count / (4.0 * var_edge);
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn narrow_noise_gives_small_face_holonomies() {
    // κ = 1/σ, so an edge spread of 0.05 radians needs σ = 0.05²
    let lat = TorusLattice::new(8).unwrap();
    let mut r = rng(4);
    let mut max: f64 = 0.0;
    for _ in 0..100 {
        let s = syndrome_sample(&lat, 0.05 * 0.05, &mut r).unwrap();
        max = s.faces.iter().fold(max, |m, h| m.max(h.abs()));
    }
    assert!(max < 0.8, "{max}");
}

#[test]
fn relative_fidelity_is_the_twisted_partition_ratio() {
    for (size, sigma, phi) in [(3, 0.8, 0.4), (4, 0.5, -1.3), (2, 1.5, 3.0)] {
        let beta = 1.0 / sigma;
        let spec = DualSumSpec::new(size, beta, Method::for_size(size)).with_twist(phi);
        let z = z_exact(&spec).unwrap();
        let r = rel_fidelity(size, sigma, phi).unwrap();
        assert_eq!(r.ln_r, z.ln_z_phi - z.ln_z);
        assert_eq!(r.chi_f, z.k2_mean);
        // χ_F = ρ_s / T in two dimensions
        let rho = stiffness_exact(size, beta).unwrap();
        assert!((r.chi_f - rho / sigma).abs() <= 1e-10 * r.chi_f);
    }
}

#[test]
fn relative_fidelity_basic_properties() {
    let curve = FidelityCurve::new(3, 0.7).unwrap();
    assert_eq!(curve.ln_r(0.0), 0.0);
    for i in 0..50 {
        let phi = -PI + i as f64 * 0.13;
        assert!(curve.r(phi) <= 1.0);
        assert!((curve.ln_r(phi) - curve.ln_r(-phi)).abs() < 1e-12);
        assert!((curve.ln_r(phi) - curve.ln_r(phi + 2.0 * PI)).abs() < 1e-10);
    }
}

#[test]
fn gaussian_law_at_weak_noise() {
    let curve = FidelityCurve::new(4, 0.4).unwrap();
    for phi in [0.05, 0.1, 0.2, 0.3] {
        let ln_r = curve.ln_r(phi);
        let gauss = -curve.chi_f * phi * phi / 2.0;
        assert!(((ln_r - gauss) / ln_r).abs() < 0.1, "phi {phi}: {ln_r} vs {gauss}");
    }
}

#[test]
fn lambda_gaussian_matches_quadrature_oracle() {
    // scipy.integrate.quad values of ∫cos·w/∫w on [−π, π]
    let cases = [
        (0.875, 0.5, 2, 8, 0.7515332049142452),
        (0.95, 0.2, 2, 8, 0.9000876262665636),
        (1.0, 1.0, 2, 8, 0.6091224862260155),
        (0.5, 0.4, 3, 16, 0.9753099120283327),
    ];
    for (rho, t, d, l, expected) in cases {
        let lam = lambda_gaussian(rho, t, d, l).unwrap();
        assert!((lam - expected).abs() < 1e-8, "{rho} {t}: {lam} vs {expected}");
    }
}

#[test]
fn lambda_exact_reduces_to_first_harmonic() {
    let curve = FidelityCurve::new(4, 0.4).unwrap();
    let lam = lambda_exact(4, 0.4, 64).unwrap();
    assert!((lam.lambda - curve.first_harmonic()).abs() < 1e-12);
    let gauss = lambda_gaussian(stiffness_exact(4, 2.5).unwrap(), 0.4, 2, 4).unwrap();
    assert!((lam.lambda - gauss).abs() < 0.05, "{} vs {gauss}", lam.lambda);
    assert!(lambda_exact(4, 0.4, 32).is_err());
    for (l, sigma) in [(2, 0.3), (3, 1.0), (4, 5.0)] {
        let v = lambda_exact(l, sigma, DEFAULT_PHI_GRID).unwrap().lambda;
        assert!((0.0..=1.0).contains(&v));
    }
}

#[test]
fn lambda_exact_vanishes_without_coupling() {
    let lam = lambda_exact(3, 1e12, 64).unwrap();
    assert!(lam.lambda.abs() < 1e-10);
}

fn synthetic_table() -> Vec<StiffnessPoint> {
    (0..=20)
        .map(|i| {
            let t = 0.1 + 0.07 * i as f64;
            StiffnessPoint {
                temperature: t,
                rho_s: (1.0 - t / 4.0 - 0.3 * t * t).max(0.02),
                rho_s_err: 0.005,
            }
        })
        .collect()
}

#[test]
fn sweep_respects_modes_and_range() {
    let table = synthetic_table();
    let sigmas: Vec<f64> = (0..=20).map(|i| 0.15 + 0.06 * i as f64).collect();
    let thermo = lambda_sweep(&table, &sigmas, 2, 32, LimitMode::Thermo, SIGMA_C).unwrap();
    for r in &thermo {
        if r.sigma > SIGMA_C {
            assert_eq!(r.lambda, 0.0);
        }
        assert!(r.lambda < 1.0 && r.lambda_err >= 0.0);
    }
    for w in thermo.windows(2) {
        assert!(w[1].lambda <= w[0].lambda + 1e-12);
    }
    let finite = lambda_sweep(&table, &[0.5], 2, 32, LimitMode::Finite, SIGMA_C).unwrap();
    assert!(finite[0].lambda > 0.0);
    assert!(matches!(
        lambda_sweep(&table, &[0.05], 2, 32, LimitMode::Finite, SIGMA_C),
        Err(xyrotor::Error::OutOfRange { .. })
    ));
    let far = lambda_sweep(&table, &[2.5], 2, 32, LimitMode::Thermo, SIGMA_C).unwrap();
    assert_eq!(far[0].lambda, 0.0);
}

#[test]
fn three_dimensional_resilience_grows_with_size() {
    let mut prev = 0.0;
    for l in [4, 16, 64, 256] {
        let lam = lambda_gaussian(0.8, 0.5, 3, l).unwrap();
        assert!(lam > prev);
        prev = lam;
    }
    assert!(prev > 0.99);
    // ρ_s L/(2T) > 350 already exceeds 0.99
    assert!(lambda_gaussian(1.0, 0.5, 3, 351).unwrap() > 0.99);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn gaussian_lambda_in_unit_interval(rho in 0.0f64..5.0, t in 0.05f64..3.0, l in 1usize..100, d in 2u32..4) {
            let lam = lambda_gaussian(rho, t, d, l).unwrap();
            prop_assert!((0.0..=1.0).contains(&lam));
        }

        #[test]
        fn gaussian_lambda_monotone_in_coupling(rho in 0.01f64..3.0, t in 0.05f64..3.0, f in 1.01f64..3.0) {
            let a = lambda_gaussian(rho, t, 2, 8).unwrap();
            let b = lambda_gaussian(rho * f, t, 2, 8).unwrap();
            prop_assert!(b >= a - 1e-12);
        }

        #[test]
        fn sampler_stays_in_range(seed in any::<u64>(), sigma in 1e-4f64..100.0) {
            let mut r = rng(seed);
            for _ in 0..100 {
                let t = von_mises_sample(&mut r, sigma).unwrap();
                prop_assert!(t > -PI && t <= PI);
            }
        }
    }
}
