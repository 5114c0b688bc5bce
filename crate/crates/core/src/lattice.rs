//! Closed-chain Hamiltonian, its eigensystem, spectral gaps, edge modes and
//! the inverse participation ratio.
//!
//! Energies are in units of the nearest-neighbour hopping. Sites are indexed
//! from 0 in the API; reports and files use 1-based site labels.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Golden-ratio modulation wavenumber `(1+√5)/2`.
pub fn golden_ratio() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Open => f.write_str("open"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

/// Parameters of the modulated tight-binding chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    n_sites: usize,
    delta: f64,
    beta: f64,
    phi: f64,
    boundary: Boundary,
}

/// Maps an angle into `[-π, π)`.
pub fn normalize_phase(phi: f64) -> f64 {
    let wrapped = (phi + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

impl LatticeSpec {
    pub fn new(n_sites: usize, delta: f64, beta: f64, phi: f64, boundary: Boundary) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid("n_sites", format!("need at least 2 sites, got {n_sites}")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::invalid("delta", format!("must be finite and non-negative, got {delta}")));
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        Ok(Self { n_sites, delta, beta, phi: normalize_phase(phi), boundary })
    }

    /// Open chain, the setup used for all bound-state and dynamics results.
    pub fn open(n_sites: usize, delta: f64, beta: f64, phi: f64) -> Result<Self> {
        Self::new(n_sites, delta, beta, phi, Boundary::Open)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    /// Phase, already normalized into `[-π, π)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// On-site energy of site `n` (1-based, as in the modulation formula).
    pub fn onsite(&self, n: usize) -> f64 {
        self.delta * (2.0 * PI * self.beta * n as f64 + self.phi).cos()
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi: normalize_phase(phi), ..*self }
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.n_sites, delta, self.beta, self.phi, self.boundary)
    }
}

/// Dense real-symmetric Hamiltonian of the closed chain.
pub fn build_lattice(spec: &LatticeSpec) -> DMatrix<f64> {
    let n = spec.n_sites;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = spec.onsite(i + 1);
        if i + 1 < n {
            h[(i, i + 1)] = 1.0;
            h[(i + 1, i)] = 1.0;
        }
    }
    if spec.boundary == Boundary::Periodic {
        h[(0, n - 1)] += 1.0;
        h[(n - 1, 0)] += 1.0;
    }
    h
}

/// Eigen-decomposition of the closed chain.
///
/// `modes` stores mode `i` as column `i`, so `modes[(n, i)]` is the amplitude
/// of mode `i` on site `n`. `weights[i]` is the sum of that column, which is
/// the mode's overlap with the uniform vector and therefore its coupling to
/// the common bath.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub modes: DMatrix<f64>,
    pub weights: Vec<f64>,
}

const DEGENERACY_TOL: f64 = 1e-10;

pub fn eigensystem(h: &DMatrix<f64>) -> Result<EigenSystem> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::invalid("hamiltonian", "must be a non-empty square matrix"));
    }
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0).ok_or(Error::Eigensolver)?;

    let argmax = |col: usize| -> usize {
        let c = eig.eigenvectors.column(col);
        let mut best = 0;
        for k in 1..n {
            if c[k].abs() > c[best].abs() + 1e-14 {
                best = k;
            }
        }
        best
    };
    let peaks: Vec<usize> = (0..n).map(argmax).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // ties inside degenerate clusters: ascending site of the largest component
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= DEGENERACY_TOL * scale {
            end += 1;
        }
        order[start..end].sort_by_key(|&i| peaks[i]);
        start = end;
    }

    let mut modes = DMatrix::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let sign = if eig.eigenvectors[(peaks[src], src)] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            modes[(k, dst)] = sign * eig.eigenvectors[(k, src)];
        }
        energies.push(eig.eigenvalues[src]);
    }
    let weights = (0..n).map(|i| modes.column(i).sum()).collect();
    Ok(EigenSystem { energies, modes, weights })
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn mode(&self, i: usize) -> Vec<f64> {
        self.modes.column(i).iter().copied().collect()
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[self.energies.len() - 1]
    }

    /// Site amplitudes → eigenbasis coefficients.
    pub fn to_eigenbasis(&self, site_amps: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let col = self.modes.column(i);
                (0..n).map(|k| site_amps[k] * col[k]).sum()
            })
            .collect()
    }

    /// Eigenbasis coefficients → site amplitudes.
    pub fn to_sites(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter().enumerate() {
            let col = self.modes.column(i);
            for k in 0..n {
                out[k] += c * col[k];
            }
        }
        out
    }

    /// `max_i |H γ_i − ε_i γ_i|` for the Hamiltonian that produced this system.
    pub fn max_residual(&self, h: &DMatrix<f64>) -> f64 {
        (0..self.len())
            .map(|i| {
                let v = self.modes.column(i);
                (h * v - v * self.energies[i]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max_ij |γ_i·γ_j − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.modes.transpose() * &self.modes;
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Anything with a squared modulus: real or complex site amplitudes.
pub trait Amplitude: Copy {
    fn modulus_sqr(self) -> f64;
}

impl Amplitude for f64 {
    fn modulus_sqr(self) -> f64 {
        self * self
    }
}

impl Amplitude for Complex64 {
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
}

/// `Σ_n |α_n|⁴` of the renormalized amplitudes; lies in `[1/N, 1]`.
pub fn inverse_participation_ratio<A: Amplitude>(amps: &[A]) -> Result<f64> {
    let norm: f64 = amps.iter().map(|a| a.modulus_sqr()).sum();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Domain("IPR of an all-zero state is undefined".into()));
    }
    Ok(amps.iter().map(|a| (a.modulus_sqr() / norm).powi(2)).sum())
}

/// Index of the site carrying the largest probability (0-based).
pub fn peak_site<A: Amplitude>(amps: &[A]) -> usize {
    let mut best = 0;
    let mut best_p = f64::NEG_INFINITY;
    for (k, a) in amps.iter().enumerate() {
        let p = a.modulus_sqr();
        if p > best_p {
            best = k;
            best_p = p;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// Semi-infinite region below the spectrum.
    Below,
    Interior,
    /// Semi-infinite region above the spectrum.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    pub kind: GapKind,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, e: f64) -> bool {
        e > self.lower && e < self.upper
    }
}

/// Open intervals between consecutive levels at least `min_width` wide,
/// bracketed by the two semi-infinite regions outside the spectrum.
pub fn find_gaps(es: &EigenSystem, min_width: f64) -> Result<Vec<Gap>> {
    if !(min_width > 0.0) {
        return Err(Error::invalid("min_width", format!("must be positive, got {min_width}")));
    }
    let e = &es.energies;
    let mut gaps = vec![Gap { lower: f64::NEG_INFINITY, upper: e[0], kind: GapKind::Below }];
    for w in e.windows(2) {
        if w[1] - w[0] >= min_width {
            gaps.push(Gap { lower: w[0], upper: w[1], kind: GapKind::Interior });
        }
    }
    gaps.push(Gap { lower: e[e.len() - 1], upper: f64::INFINITY, kind: GapKind::Above });
    Ok(gaps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Right,
}

impl Edge {
    /// 1-based label of the boundary site.
    pub fn site_label(&self, n_sites: usize) -> usize {
        match self {
            Edge::Left => 1,
            Edge::Right => n_sites,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCriteria {
    pub ipr_threshold: f64,
    pub edge_window: usize,
}

impl Default for EdgeCriteria {
    fn default() -> Self {
        Self { ipr_threshold: 0.1, edge_window: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeMode {
    pub index: usize,
    pub end: Edge,
}

/// Modes bordering an interior gap that are localized on a chain end.
///
/// Gaps are bounded by levels, so an in-gap edge level appears as an
/// endpoint of the interior gap(s) it splits.
pub fn classify_edge_modes(es: &EigenSystem, gaps: &[Gap], criteria: &EdgeCriteria) -> Vec<EdgeMode> {
    let n = es.len();
    let window = criteria.edge_window.min(n);
    let borders_gap = |e: f64| {
        gaps.iter()
            .filter(|g| g.kind == GapKind::Interior)
            .any(|g| g.lower == e || g.upper == e)
    };
    let mut found = Vec::new();
    for i in 0..n {
        if !borders_gap(es.energies[i]) {
            continue;
        }
        let col = es.modes.column(i);
        let probs: Vec<f64> = col.iter().map(|x| x * x).collect();
        let ipr: f64 = probs.iter().map(|p| p * p).sum();
        if ipr < criteria.ipr_threshold {
            continue;
        }
        let left: f64 = probs[..window].iter().sum();
        let right: f64 = probs[n - window..].iter().sum();
        let end = if left >= 0.5 && left >= right {
            Edge::Left
        } else if right >= 0.5 {
            Edge::Right
        } else {
            continue;
        };
        found.push(EdgeMode { index: i, end });
    }
    found
}
