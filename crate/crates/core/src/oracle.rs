//! Independent references for the spectral and dynamical solvers.
//!
//! Two of them: the closed-form levels of the period-3 chain on a ring, and
//! brute-force treatment of a bath cut into finitely many modes, where the
//! single-excitation problem is an ordinary Hermitian matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::dynamics::{evolve_with, EvolveOptions, TimeGrid};
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, eigensystem, Boundary, LatticeSpec};
use crate::quad::integrate;
use crate::spectral::{find_bound_states, SearchOptions};

/// Largest matrix handed to the dense eigensolver.
pub const DENSE_CAP: usize = 5000;

/// Bath modes `ω_k` with couplings `g_k = √(J(ω_k)Δω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl DiscreteBath {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// `Σ_k g_k²`, the discrete counterpart of `∫J`.
    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }

    /// `Σ_k g_k²/(E − ω_k)`.
    pub fn self_energy(&self, e: f64) -> f64 {
        self.frequencies.iter().zip(&self.couplings).map(|(w, g)| g * g / (e - w)).sum()
    }
}

/// Midpoint discretization of `[0, omega_max]` into `m` equal cells.
pub fn discretize_bath(bath: &BathSpec, m: usize, omega_max: f64) -> Result<DiscreteBath> {
    if m < 10 {
        return Err(Error::invalid("modes", format!("need at least 10, got {m}")));
    }
    if !(omega_max >= 10.0 * bath.omega_c()) {
        return Err(Error::invalid("omega_max", format!("must be at least 10·omega_c, got {omega_max}")));
    }
    let dw = omega_max / m as f64;
    let frequencies: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) * dw).collect();
    let couplings = frequencies.iter().map(|&w| (bath.j(w) * dw).sqrt()).collect();
    Ok(DiscreteBath { frequencies, couplings })
}

/// Levels of the period-3 ring, labelled by branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q3Levels {
    /// Branches `cos(θ+2π/3)`, `cos(θ+4π/3)` and `cos θ`, in that order.
    /// `None` where the trigonometric form has no real solution.
    pub branches: [Option<f64>; 3],
}

impl Q3Levels {
    /// The real solutions in ascending order.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.branches.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

const BRANCH_OFFSETS: [f64; 3] = [2.0 * PI / 3.0, 4.0 * PI / 3.0, 0.0];

/// Roots of `λ³ − 3(t²+Δ²/4)λ − (2t³ + Δ³cos3φ/4) = 0`, the zero-momentum
/// block of the ring with effective hopping `t`.
fn cubic_branch(k: usize, t: f64, delta: f64, phi: f64) -> Option<f64> {
    let p = t * t + delta * delta / 4.0;
    if p == 0.0 {
        return Some(0.0);
    }
    let arg = (t.powi(3) + delta.powi(3) * (3.0 * phi).cos() / 8.0) / p.powf(1.5);
    let arg = if arg.abs() <= 1.0 {
        arg
    } else if arg.abs() <= 1.0 + 1e-12 {
        arg.signum()
    } else {
        return None;
    };
    let theta = arg.acos() / 3.0;
    Some(2.0 * p.sqrt() * (theta + BRANCH_OFFSETS[k]).cos())
}

/// Self-consistent levels of the 3L-site ring with period-3 modulation.
///
/// Only the zero-momentum block touches the bath, through `σ = L·Σ(E)` on
/// every entry of its 3×3 matrix. That shifts the hopping to `1+σ` and the
/// energy by `σ`, so each branch solves `E = λ_k(1+σ(E)) + σ(E)`.
pub fn commensurate_levels_q3(l: usize, delta: f64, phi: f64, bath: &BathSpec) -> Result<Q3Levels> {
    if l == 0 {
        return Err(Error::invalid("cells", "need at least one unit cell"));
    }
    let sigma = |e: f64| -> Result<f64> {
        if bath.eta() == 0.0 {
            Ok(0.0)
        } else {
            Ok(l as f64 * bath.self_energy(e)?)
        }
    };
    let rhs = |k: usize, e: f64| -> Result<Option<f64>> {
        let s = sigma(e)?;
        Ok(cubic_branch(k, 1.0 + s, delta, phi).map(|lam| lam + s))
    };

    let mut branches = [None; 3];
    for (k, slot) in branches.iter_mut().enumerate() {
        let Some(mut e) = cubic_branch(k, 1.0, delta, phi) else { continue };
        if bath.eta() == 0.0 {
            *slot = Some(e);
            continue;
        }
        let mut converged = false;
        for _ in 0..500 {
            let Some(next) = rhs(k, nudge(e))? else { break };
            let step = 0.5 * (next - e);
            e += step;
            if step.abs() <= 1e-10 {
                converged = true;
                break;
            }
        }
        if !converged {
            match bracketed(|x| Ok(rhs(k, x)?.map(|r| x - r)), e)? {
                Some(root) => e = root,
                None => continue,
            }
        }
        *slot = Some(e);
    }
    Ok(Q3Levels { branches })
}

fn nudge(e: f64) -> f64 {
    if e.abs() < 1e-9 {
        -1e-9
    } else {
        e
    }
}

/// Bisection on `g` after widening a bracket around `start`.
fn bracketed<G: Fn(f64) -> Result<Option<f64>>>(g: G, start: f64) -> Result<Option<f64>> {
    let Some(g0) = g(nudge(start))? else { return Ok(None) };
    let mut width = 0.01;
    for _ in 0..40 {
        for x in [start - width, start + width] {
            let x = nudge(x);
            let Some(gx) = g(x)? else { continue };
            if (gx < 0.0) != (g0 < 0.0) {
                let (mut lo, mut hi, mut glo) = if x < start { (x, start, gx) } else { (start, x, g0) };
                for _ in 0..200 {
                    let mid = nudge(0.5 * (lo + hi));
                    let Some(gm) = g(mid)? else { return Ok(None) };
                    if (gm < 0.0) == (glo < 0.0) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-12 {
                        break;
                    }
                }
                return Ok(Some(0.5 * (lo + hi)));
            }
        }
        width *= 2.0;
    }
    Ok(None)
}

/// `∫₀^∞ J(ω) e^{−iωt} dω` by brute-force quadrature, in panels short
/// enough to hold about one oscillation each.
pub fn kernel_by_quadrature(bath: &BathSpec, t: f64) -> Complex64 {
    let top = 60.0 * bath.omega_c() * bath.s().max(1.0);
    let panel = if t > 0.0 { (2.0 * PI / t).min(bath.omega_c()) } else { bath.omega_c() };
    let panels = (top / panel).ceil() as usize;
    let mut re = 0.0;
    let mut im = 0.0;
    for p in 0..panels {
        let a = p as f64 * panel;
        let b = a + panel;
        re += integrate(|w| bath.j(w) * (w * t).cos(), a, b, 1e-15, 50).value;
        im -= integrate(|w| bath.j(w) * (w * t).sin(), a, b, 1e-15, 50).value;
    }
    Complex64::new(re, im)
}

/// Single-excitation matrix `[[H_S, G], [Gᵀ, diag ω]]` with `G_{nk} = g_k`.
pub fn single_excitation_matrix(spec: &LatticeSpec, db: &DiscreteBath) -> DMatrix<f64> {
    let n = spec.n_sites();
    let m = db.len();
    let mut h = DMatrix::zeros(n + m, n + m);
    h.view_mut((0, 0), (n, n)).copy_from(&build_lattice(spec));
    for (k, (&w, &g)) in db.frequencies.iter().zip(&db.couplings).enumerate() {
        h[(n + k, n + k)] = w;
        for s in 0..n {
            h[(s, n + k)] = g;
            h[(n + k, s)] = g;
        }
    }
    h
}

/// All eigenvalues of the single-excitation matrix, ascending.
pub fn exact_levels(spec: &LatticeSpec, db: &DiscreteBath) -> Result<Vec<f64>> {
    let dim = spec.n_sites() + db.len();
    if dim > DENSE_CAP {
        return Err(Error::SizeCap { dim, cap: DENSE_CAP });
    }
    let h = single_excitation_matrix(spec, db);
    let mut v: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigensolver);
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Chain part and total norm of an exact run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrajectory {
    pub times: Vec<f64>,
    pub amps: Vec<Vec<Complex64>>,
    /// Probability left on the chain.
    pub chain_norms: Vec<f64>,
    /// Norm of the full state, conserved up to rounding.
    pub total_norms: Vec<f64>,
}

struct Structured<'a> {
    onsite: Vec<f64>,
    periodic: bool,
    db: &'a DiscreteBath,
}

impl Structured<'_> {
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.onsite.len();
        let (vs, vb) = v.split_at(n);
        let (os, ob) = out.split_at_mut(n);
        let bath_sum: Complex64 = vb.iter().zip(&self.db.couplings).map(|(x, g)| x * g).sum();
        let chain_sum: Complex64 = vs.iter().sum();
        for i in 0..n {
            let mut acc = vs[i] * self.onsite[i] + bath_sum;
            if i > 0 {
                acc += vs[i - 1];
            }
            if i + 1 < n {
                acc += vs[i + 1];
            }
            os[i] = acc;
        }
        if self.periodic && n > 2 {
            os[0] += vs[n - 1];
            os[n - 1] += vs[0];
        } else if self.periodic {
            os[0] += vs[1];
            os[1] += vs[0];
        }
        for (k, o) in ob.iter_mut().enumerate() {
            *o = vb[k] * self.db.frequencies[k] + chain_sum * self.db.couplings[k];
        }
    }

    fn norm_bound(&self) -> f64 {
        let onsite = self.onsite.iter().fold(0.0_f64, |m, x| m.max(x.abs())) + 2.0;
        let wmax = self.db.frequencies.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let coupling = (self.onsite.len() as f64 * self.db.total_weight()).sqrt();
        onsite.max(wmax) + coupling
    }
}

/// Exact evolution in the discretized-bath space by a Taylor series on the
/// sparse matrix-vector product, with the bath initially empty.
pub fn exact_trajectory(
    spec: &LatticeSpec,
    db: &DiscreteBath,
    initial: &[Complex64],
    t_max: f64,
    record_dt: f64,
) -> Result<ExactTrajectory> {
    let n = spec.n_sites();
    if initial.len() != n {
        return Err(Error::invalid("initial", format!("expected {n} amplitudes")));
    }
    if !(t_max > 0.0 && record_dt > 0.0) {
        return Err(Error::invalid("t_max", "times must be positive"));
    }
    let op = Structured {
        onsite: (1..=n).map(|s| spec.onsite(s)).collect(),
        periodic: spec.boundary() == Boundary::Periodic,
        db,
    };
    let dim = n + db.len();
    let records = (t_max / record_dt - 1e-9).ceil() as usize;
    let substeps = (op.norm_bound() * record_dt / 2.0).ceil().max(1.0) as usize;
    let h = record_dt / substeps as f64;

    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[..n].copy_from_slice(initial);
    let mut term = vec![Complex64::new(0.0, 0.0); dim];
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    let mut out = ExactTrajectory { times: vec![], amps: vec![], chain_norms: vec![], total_norms: vec![] };
    let mut push = |t: f64, psi: &[Complex64]| {
        out.times.push(t);
        out.amps.push(psi[..n].to_vec());
        out.chain_norms.push(psi[..n].iter().map(|z| z.norm_sqr()).sum());
        out.total_norms.push(psi.iter().map(|z| z.norm_sqr()).sum());
    };
    push(0.0, &psi);
    let minus_ih = Complex64::new(0.0, -h);
    for r in 1..=records {
        for _ in 0..substeps {
            term.copy_from_slice(&psi);
            for order in 1..=60 {
                op.apply(&term, &mut next);
                let scale = minus_ih / order as f64;
                let mut size = 0.0;
                for (t, x) in term.iter_mut().zip(&next) {
                    *t = x * scale;
                    size += t.norm_sqr();
                }
                for (p, t) in psi.iter_mut().zip(&term) {
                    *p += t;
                }
                if size < 1e-34 {
                    break;
                }
            }
        }
        push(r as f64 * record_dt, &psi);
    }
    Ok(out)
}

/// What to compare against the discretized-bath reference.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossCheckRequest {
    Energies,
    Trajectory { initial: Vec<Complex64>, grid: TimeGrid, record_dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMatch {
    pub secular: f64,
    pub exact: f64,
}

impl LevelMatch {
    pub fn deviation(&self) -> f64 {
        (self.secular - self.exact).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CrossCheckReport {
    Energies {
        /// Exact levels below zero (bound states and untouched dark levels).
        isolated: Vec<f64>,
        /// Each secular bound state against the nearest exact level.
        matches: Vec<LevelMatch>,
    },
    Trajectory {
        exact: ExactTrajectory,
        /// `max_{t,n} |α_n^exact(t) − α_n^memory(t)|` at the shared times.
        max_deviation: f64,
    },
}

pub fn exact_cross_check(
    spec: &LatticeSpec,
    bath: &BathSpec,
    db: &DiscreteBath,
    request: &CrossCheckRequest,
) -> Result<CrossCheckReport> {
    let es = eigensystem(&build_lattice(spec))?;
    match request {
        CrossCheckRequest::Energies => {
            let levels = exact_levels(spec, db)?;
            let isolated: Vec<f64> = levels.iter().copied().filter(|&e| e < 0.0).collect();
            let found = find_bound_states(&es, bath, &SearchOptions::default())?;
            let matches = found
                .states
                .iter()
                .map(|b| {
                    let exact = levels
                        .iter()
                        .copied()
                        .min_by(|x, y| (x - b.energy).abs().total_cmp(&(y - b.energy).abs()))
                        .unwrap_or(f64::NAN);
                    LevelMatch { secular: b.energy, exact }
                })
                .collect();
            Ok(CrossCheckReport::Energies { isolated, matches })
        }
        CrossCheckRequest::Trajectory { initial, grid, record_dt } => {
            let exact = exact_trajectory(spec, db, initial, grid.t_max(), *record_dt)?;
            let stride = (record_dt / grid.dt()).round() as usize;
            if stride == 0 || ((stride as f64) * grid.dt() - record_dt).abs() > 1e-9 * record_dt {
                return Err(Error::invalid("record_dt", "must be a whole multiple of dt"));
            }
            let memory = evolve_with(&es, initial, bath, grid, &EvolveOptions { record_every: stride })?;
            let mut max_deviation: f64 = 0.0;
            for (a, b) in exact.amps.iter().zip(&memory.amps) {
                for (x, y) in a.iter().zip(b) {
                    max_deviation = max_deviation.max((x - y).norm());
                }
            }
            Ok(CrossCheckReport::Trajectory { exact, max_deviation })
        }
    }
}
