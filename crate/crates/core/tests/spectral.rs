mod common;

use aah_core::lattice::build_lattice;
use aah_core::spectral::{
    bound_state_weight, dark_levels, find_bound_states, secular_value, BoundKind, SearchOptions, DARK_TOL,
};
use aah_core::{BathSpec, LatticeSpec};
use common::{golden, open, system, MINUS_PI};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// `H_S + Σ(E)·𝟙𝟙ᵀ − E`, assembled densely.
fn effective(spec: &LatticeSpec, bath: &BathSpec, e: f64) -> DMatrix<f64> {
    let n = spec.n_sites();
    let sigma = bath.self_energy(e).unwrap();
    build_lattice(spec) + DMatrix::from_element(n, n, sigma) - DMatrix::identity(n, n) * e
}

fn smallest_singular(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))
}

#[test]
fn secular_function_is_the_reduced_determinant() {
    let spec = open(12, 1.3, golden(), 0.4);
    let es = system(&spec);
    let bath = BathSpec::default();
    let poles = &es.energies;
    let mut checked = 0;
    for k in 0..200 {
        let e = -30.0 + 29.99 * k as f64 / 199.0;
        if poles.iter().any(|p| (p - e).abs() < 1e-3) {
            continue;
        }
        let det = effective(&spec, &bath, e).determinant();
        let prod: f64 = poles.iter().map(|p| p - e).product();
        let reduced = secular_value(e, &es, &bath).unwrap() * prod;
        assert_eq!(det.signum(), reduced.signum(), "E={e}");
        assert!((det - reduced).abs() <= 1e-6 * det.abs().max(1e-300), "E={e}: {det} vs {reduced}");
        checked += 1;
    }
    assert!(checked > 190);
}

#[test]
fn ground_state_is_the_fixed_point_of_the_lowest_eigenvalue() {
    let spec = open(99, 2.0, 1.0 / 3.0, MINUS_PI);
    let bath = BathSpec::default();
    let es = system(&spec);
    let lowest = |e: f64| -> f64 {
        let n = spec.n_sites();
        let sigma = bath.self_energy(e).unwrap();
        let m = build_lattice(&spec) + DMatrix::from_element(n, n, sigma);
        m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min) - e
    };
    let (mut lo, mut hi) = (-60.0, es.min_energy() - 1e-6);
    assert!(lowest(lo) > 0.0 && lowest(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lowest(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let found = find_bound_states(&es, &bath, &SearchOptions::default()).unwrap();
    let e0 = found.ground().unwrap().energy;
    assert!((e0 - 0.5 * (lo + hi)).abs() < 1e-8, "{e0} vs {}", 0.5 * (lo + hi));
}

#[test]
fn every_root_is_a_null_vector() {
    let bath = BathSpec::default();
    for (beta, delta, phi) in [(1.0 / 3.0, 2.0, MINUS_PI), (1.0 / 3.0, 2.0, 0.0), (golden(), 4.0, 0.4 * std::f64::consts::PI)] {
        let spec = open(99, delta, beta, phi);
        let es = system(&spec);
        let opts = SearchOptions { include_positive: true, ..SearchOptions::default() };
        let found = find_bound_states(&es, &bath, &opts).unwrap();
        assert!(!found.states.is_empty());
        for b in &found.states {
            assert!(b.null_residual(&es) <= 1e-8, "{} at {}", b.kind, b.energy);
            let norm: f64 = b.amplitudes.iter().map(|a| a * a).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            // independent check: the dense effective matrix is singular at E
            assert!(smallest_singular(&effective(&spec, &bath, b.energy)) < 1e-7);
            let sum: f64 = b.amplitudes.iter().sum();
            assert!((sum - b.sum_alpha).abs() < 1e-10);
        }
    }
}

#[test]
fn kinds_emission_and_counts() {
    let bath = BathSpec::default();
    let spec = open(99, 2.0, 1.0 / 3.0, MINUS_PI);
    let es = system(&spec);
    let found = find_bound_states(&es, &bath, &SearchOptions::default()).unwrap();
    let negative: Vec<_> = found.states.iter().filter(|b| b.energy < 0.0).collect();
    assert!(negative.len() <= 99);
    for b in &found.states {
        assert_eq!(b.kind == BoundKind::DbsGround, b.energy < es.min_energy());
        if b.energy < 0.0 {
            assert!(b.emission > 0.0);
            let slope = bath.self_energy_slope(b.energy).unwrap();
            assert!((b.emission - b.sum_alpha.powi(2) * slope).abs() < 1e-12 * (1.0 + b.emission));
            assert!((b.bath_fraction() - b.emission / (1.0 + b.emission)).abs() < 1e-15);
        }
    }
    assert_eq!(found.of_kind(BoundKind::DbsGround).count(), 1);
    assert_eq!(found.of_kind(BoundKind::DbsGap).count(), 2);
    assert!(found.warnings.is_empty());
}

#[test]
fn ground_energy_grows_with_size_while_gap_roots_do_not() {
    let bath = BathSpec::default();
    let roots = |n: usize| {
        let es = system(&open(n, 2.0, 1.0 / 3.0, MINUS_PI));
        find_bound_states(&es, &bath, &SearchOptions::default()).unwrap()
    };
    let (small, big) = (roots(33), roots(99));
    let gap: Vec<f64> = big.of_kind(BoundKind::DbsGap).map(|b| b.energy).collect();
    let split = (gap[1] - gap[0]).abs();
    let shift = (big.ground().unwrap().energy - small.ground().unwrap().energy).abs();
    assert!(shift > 10.0 * split, "{shift} vs {split}");
}

#[test]
fn gap_roots_barely_feel_the_ohmicity() {
    let spec = open(99, 2.0, 1.0 / 3.0, MINUS_PI);
    let es = system(&spec);
    let mut gaps = Vec::new();
    let mut grounds = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let bath = BathSpec::new(0.1, s, 10.0).unwrap();
        let found = find_bound_states(&es, &bath, &SearchOptions::default()).unwrap();
        gaps.push(found.of_kind(BoundKind::DbsGap).map(|b| b.energy).collect::<Vec<_>>());
        grounds.push(found.ground().unwrap().energy);
    }
    let gap_spread = (0..2).map(|k| (0..3).map(|i| gaps[i][k]).fold(f64::NEG_INFINITY, f64::max) - (0..3).map(|i| gaps[i][k]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let ground_spread = grounds.iter().copied().fold(f64::NEG_INFINITY, f64::max) - grounds.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(gap_spread <= 1e-2);
    assert!(ground_spread > 10.0 * gap_spread);
}

#[test]
fn edge_aligned_dbs_localizes_with_modulation() {
    let bath = BathSpec::default();
    let mut ipr = Vec::new();
    for delta in [1.0, 2.0, 4.0] {
        let es = system(&open(99, delta, golden(), MINUS_PI));
        let found = find_bound_states(&es, &bath, &SearchOptions::default()).unwrap();
        let edge = found.of_kind(BoundKind::DbsGap).find(|b| b.loc_site == 98).expect("edge-aligned root");
        assert!(edge.emission < 1e-3);
        ipr.push(edge.ipr);
    }
    assert!(ipr[0] < ipr[1] && ipr[1] < ipr[2], "{ipr:?}");
}

#[test]
fn dark_levels_survive_the_bath() {
    let spec = open(99, 0.0, 0.3, 0.0);
    let es = system(&spec);
    let dark = dark_levels(&es, DARK_TOL);
    // antisymmetric standing waves of the uniform chain
    assert_eq!(dark.len(), 49);
    let bath = BathSpec::default();
    for &i in dark.iter().take(5) {
        let e = es.energies[i];
        if e.abs() < 1e-6 {
            continue;
        }
        let m = effective(&spec, &bath, e);
        let mode = nalgebra::DVector::from_vec(es.mode(i));
        assert!((m * mode).norm() < 1e-8);
    }
}

#[test]
fn bound_weight_limits() {
    let spec = open(99, 2.0, 1.0 / 3.0, 0.0);
    let es = system(&spec);
    let bath = BathSpec::default();
    let opts = SearchOptions { include_positive: true, ..SearchOptions::default() };
    let found = find_bound_states(&es, &bath, &opts).unwrap();
    let bic = found.of_kind(BoundKind::Bic).find(|b| (b.energy - 2.3075).abs() < 1e-3).unwrap();

    let itself = bic.amplitudes_complex();
    let w = bound_state_weight(bic, &itself, &es, &bath).unwrap();
    assert!((w.value() - 1.0 / (1.0 + bic.emission)).abs() < 1e-6);

    // a dark mode is orthogonal to every coupled bound state
    let dark = dark_levels(&es, DARK_TOL);
    assert!(dark.is_empty() || {
        let d: Vec<Complex64> = es.mode(dark[0]).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        bound_state_weight(bic, &d, &es, &bath).unwrap().value().abs() < 1e-10
    });

    // component of the initial state along the mode, built by Gram-Schmidt
    let mut other = vec![Complex64::new(0.0, 0.0); 99];
    other[0] = Complex64::new(1.0, 0.0);
    let overlap: Complex64 = other.iter().zip(&itself).map(|(a, b)| a * b).sum();
    let mut orth: Vec<Complex64> = other.iter().zip(&itself).map(|(a, b)| a - overlap * b).collect();
    let nrm = orth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    orth.iter_mut().for_each(|z| *z /= nrm);
    assert!(bound_state_weight(bic, &orth, &es, &bath).unwrap().value() < 1e-10);
}
