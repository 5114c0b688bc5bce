mod common;

use aah_core::lattice::{
    build_lattice, classify_edge_modes, find_gaps, inverse_participation_ratio, normalize_phase, peak_site, Edge,
    EdgeCriteria, GapKind,
};
use common::{golden, open, ring, system};
use std::f64::consts::PI;

#[test]
fn uniform_open_chain_matches_standing_waves() {
    let n = 40;
    let es = system(&open(n, 0.0, 0.3, 0.7));
    let mut exact: Vec<f64> = (1..=n).map(|k| 2.0 * (k as f64 * PI / (n + 1) as f64).cos()).collect();
    exact.sort_by(f64::total_cmp);
    for (a, b) in es.energies.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn uniform_ring_matches_plane_waves() {
    let n = 30;
    let es = system(&ring(n, 0.0, 0.3, 0.0));
    let mut exact: Vec<f64> = (0..n).map(|k| 2.0 * (2.0 * PI * k as f64 / n as f64).cos()).collect();
    exact.sort_by(f64::total_cmp);
    for (a, b) in es.energies.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-8);
    }
    // only the k = 0 plane wave overlaps the uniform vector
    let bright: Vec<usize> = (0..n).filter(|&i| es.weights[i].abs() > 1e-8).collect();
    assert_eq!(bright, vec![n - 1]);
    assert!((es.weights[n - 1].powi(2) - n as f64).abs() < 1e-8);
}

#[test]
fn onsite_potential_follows_cosine() {
    let spec = open(9, 1.7, 0.31, 0.4);
    let h = build_lattice(&spec);
    for n in 1..=9 {
        let v = 1.7 * (2.0 * PI * 0.31 * n as f64 + 0.4).cos();
        assert!((h[(n - 1, n - 1)] - v).abs() < 1e-14);
    }
    assert_eq!(h[(0, 8)], 0.0);
    let closed = build_lattice(&ring(9, 1.7, 0.31, 0.4));
    assert_eq!(closed[(0, 8)], 1.0);
    assert_eq!(closed[(8, 0)], 1.0);
}

#[test]
fn eigensystem_invariants_at_full_size() {
    for (beta, delta, phi) in [(1.0 / 3.0, 2.0, -PI), (golden(), 4.0, 0.4 * PI), (golden(), 1.0, 0.0)] {
        let spec = open(99, delta, beta, phi);
        let h = build_lattice(&spec);
        let es = system(&spec);
        let scale = es.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        assert!(es.max_residual(&h) <= 1e-10 * scale);
        assert!(es.orthonormality_defect() <= 1e-10);
        let parseval: f64 = es.weights.iter().map(|w| w * w).sum();
        assert!((parseval - 99.0).abs() < 1e-8);
        assert!(es.energies.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..es.len() {
            let m = es.mode(i);
            let big = m.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(big > 0.0);
        }
    }
}

#[test]
fn mean_ipr_grows_with_modulation() {
    let mean = |d: f64| {
        let es = system(&open(99, d, golden(), 0.0));
        (0..es.len()).map(|i| inverse_participation_ratio(&es.mode(i)).unwrap()).sum::<f64>() / 99.0
    };
    let (a, b, c) = (mean(1.0), mean(2.0), mean(4.0));
    assert!(a < b && b < c, "{a} {b} {c}");
}

#[test]
fn ipr_limits() {
    let flat = vec![1.0; 25];
    assert!((inverse_participation_ratio(&flat).unwrap() - 1.0 / 25.0).abs() < 1e-15);
    let mut spike = vec![0.0; 25];
    spike[3] = -2.0;
    assert_eq!(inverse_participation_ratio(&spike).unwrap(), 1.0);
    assert_eq!(peak_site(&spike), 3);
    assert!(inverse_participation_ratio(&[0.0, 0.0]).is_err());
}

#[test]
fn phase_is_wrapped_on_construction() {
    assert_eq!(open(5, 1.0, 0.2, PI).phi(), -PI);
    assert!((open(5, 1.0, 0.2, 3.0 * PI + 0.1).phi() - (-PI + 0.1)).abs() < 1e-12);
    assert_eq!(normalize_phase(0.25), 0.25);
}

#[test]
fn rejects_bad_specs() {
    assert!(aah_core::LatticeSpec::open(1, 1.0, 0.2, 0.0).is_err());
    assert!(aah_core::LatticeSpec::open(5, -1.0, 0.2, 0.0).is_err());
    assert!(aah_core::LatticeSpec::open(5, 1.0, f64::NAN, 0.0).is_err());
}

#[test]
fn gaps_cover_both_sides() {
    let es = system(&open(99, 2.0, 1.0 / 3.0, -PI));
    let gaps = find_gaps(&es, 0.05).unwrap();
    assert_eq!(gaps.first().unwrap().kind, GapKind::Below);
    assert_eq!(gaps.last().unwrap().kind, GapKind::Above);
    let interior: Vec<_> = gaps.iter().filter(|g| g.kind == GapKind::Interior).collect();
    // three bands of the period-3 chain, each split by in-gap edge levels
    assert!(interior.len() >= 2);
    assert!(interior.iter().all(|g| g.width() >= 0.05));
    assert!(find_gaps(&es, 0.0).is_err());
}

#[test]
fn edge_mode_next_to_upper_gap_sits_on_the_right_end() {
    let es = system(&open(99, 2.0, 1.0 / 3.0, 0.0));
    let gaps = find_gaps(&es, 0.05).unwrap();
    let edges = classify_edge_modes(&es, &gaps, &EdgeCriteria::default());
    let right: Vec<_> = edges.iter().filter(|m| m.end == Edge::Right).collect();
    assert!(right.iter().any(|m| (es.energies[m.index] - 2.302776).abs() < 1e-5));
    assert_eq!(Edge::Right.site_label(99), 99);
    for m in &edges {
        let mode = es.mode(m.index);
        let site = peak_site(&mode);
        assert!(!(10..89).contains(&site));
    }
}
