mod common;

use aah_core::bath::ohmic_self_energy_closed_form;
use aah_core::BathSpec;
use common::{density, self_energy_above, self_energy_below, simpson};
use num_complex::Complex64;

#[test]
fn density_matches_definition() {
    for (eta, s, wc) in [(0.1, 1.0, 10.0), (0.3, 0.5, 4.0), (0.05, 2.0, 7.0)] {
        let bath = BathSpec::new(eta, s, wc).unwrap();
        for w in [0.0, 0.01, 1.0, 9.5, 40.0] {
            let j = bath.spectral_density(w).unwrap();
            assert!((j - density(eta, s, wc, w)).abs() <= 1e-13 * (1.0 + j));
        }
        assert!(bath.spectral_density(-1.0).is_err());
    }
}

#[test]
fn total_weight_of_ohmic_bath() {
    let bath = BathSpec::default();
    assert!((bath.total_weight() - 0.1 * 100.0).abs() < 1e-12);
    let direct = simpson(|u| if u < 1.0 { density(0.1, 1.0, 10.0, 10.0 * u / (1.0 - u)) * 10.0 / (1.0 - u).powi(2) } else { 0.0 }, 0.0, 1.0, 20_000);
    assert!((direct - bath.total_weight()).abs() < 1e-8);
}

#[test]
fn self_energy_below_zero_matches_simpson() {
    for (s, e) in [(1.0, -0.3), (1.0, -23.0), (0.5, -2.0), (2.0, -5.0)] {
        let bath = BathSpec::new(0.1, s, 10.0).unwrap();
        let got = bath.self_energy(e).unwrap();
        let want = self_energy_below(0.1, s, 10.0, e);
        assert!((got - want).abs() < 1e-8 * (1.0 + want.abs()), "s={s} E={e}: {got} vs {want}");
    }
}

#[test]
fn principal_value_above_zero_matches_subtraction() {
    for (s, e) in [(1.0, 1.1), (1.0, 2.3), (1.0, 15.0), (2.0, 0.8)] {
        let bath = BathSpec::new(0.1, s, 10.0).unwrap();
        let got = bath.self_energy(e).unwrap();
        let want = self_energy_above(0.1, s, 10.0, e);
        assert!((got - want).abs() < 1e-7, "s={s} E={e}: {got} vs {want}");
    }
}

#[test]
fn ohmic_closed_form_agrees_with_quadrature() {
    let bath = BathSpec::default();
    for e in [-30.0, -1.0, -1e-3, -2.3, -25.0] {
        let q = bath.self_energy(e).unwrap();
        let c = ohmic_self_energy_closed_form(e, 0.1, 10.0).unwrap();
        assert!((q - c).abs() < 1e-8, "E={e}: {q} vs {c}");
    }
    assert!(ohmic_self_energy_closed_form(0.0, 0.1, 10.0).is_err());
    assert!(ohmic_self_energy_closed_form(1.0, 0.1, 10.0).is_err());
}

#[test]
fn zero_energy_is_excluded() {
    assert!(BathSpec::default().self_energy(0.0).is_err());
}

#[test]
fn slope_matches_finite_difference() {
    for s in [0.5, 1.0, 2.0] {
        let bath = BathSpec::new(0.1, s, 10.0).unwrap();
        for e in [-25.0f64, -2.32, -0.05, 0.4, 2.3] {
            let h = 1e-4 * e.abs().max(0.1);
            let fd = (bath.self_energy(e + h).unwrap() - bath.self_energy(e - h).unwrap()) / (2.0 * h);
            let d = bath.self_energy_derivative(e).unwrap();
            assert!((d - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "s={s} E={e}: {d} vs {fd}");
            if e < 0.0 {
                assert_eq!(bath.self_energy_slope(e).unwrap(), -d);
                assert!(d < 0.0);
            }
        }
    }
    assert!(BathSpec::default().self_energy_slope(1.0).is_err());
}

#[test]
fn finite_for_every_ohmicity() {
    for s in [0.5, 1.0, 2.0] {
        let v = BathSpec::new(0.1, s, 10.0).unwrap().self_energy(-5.0).unwrap();
        assert!(v.is_finite() && v < 0.0);
    }
}

#[test]
fn kernel_is_the_fourier_transform_of_the_density() {
    for (s, wc) in [(1.0, 10.0), (0.5, 10.0), (2.0, 3.0)] {
        let bath = BathSpec::new(0.1, s, wc).unwrap();
        for t in [0.0, 0.05, 0.3, 1.0, 4.0] {
            let f = bath.memory_kernel(t).unwrap();
            // substitute ω = x² to tame the ω^s cusp at the origin for s < 1
            let re = simpson(|x| 2.0 * x * density(0.1, s, wc, x * x) * (x * x * t).cos(), 0.0, (60.0 * wc).sqrt(), 400_000);
            let im = simpson(|x| -2.0 * x * density(0.1, s, wc, x * x) * (x * x * t).sin(), 0.0, (60.0 * wc).sqrt(), 400_000);
            let d = (f - Complex64::new(re, im)).norm();
            assert!(d < 1e-6, "s={s} t={t}: {f} vs {re}+{im}i");
        }
        assert!((bath.memory_kernel(0.0).unwrap().re - bath.total_weight()).abs() < 1e-10);
        assert!(bath.memory_kernel(-1.0).is_err());
    }
}

#[test]
fn rejects_unphysical_baths() {
    assert!(BathSpec::new(-0.1, 1.0, 10.0).is_err());
    assert!(BathSpec::new(0.1, 0.0, 10.0).is_err());
    assert!(BathSpec::new(0.1, 1.0, 0.0).is_err());
    assert!(BathSpec::new(0.0, 1.0, 10.0).is_ok());
}
