//! Single-excitation dynamics with the bath's memory.
//!
//! The amplitudes obey `α̇ = −iH_Sα − K(t)𝟙` with
//! `K(t) = ∫₀ᵗ f(t−τ) S(τ) dτ` and `S = Σ_n α_n`. The memory term is the
//! same for every site, so in the lattice eigenbasis each coefficient sees
//! `ȧ_i = −iε_i a_i − w_i K(t)` and only the scalar history `S(t)` needs to
//! be kept.
//!
//! Each step propagates `H_S` exactly and integrates the forcing against
//! `e^{−iε_i(t_{k+1}−s)}` with `K` interpolated by a cubic through
//! `t_{k−2} … t_{k+1}`. The convolution is done by product integration: `S`
//! is replaced by local cubics and the kernel, which decays on the short
//! scale `1/ω_c`, is integrated exactly against them. The only unknown at the new time is the scalar
//! `S_{k+1}`, and it enters linearly, so the implicit step is solved
//! in closed form. The scheme is fourth order in `dt`.

use std::ops::Range;

use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::lattice::{build_lattice, eigensystem, inverse_participation_ratio, EigenSystem, LatticeSpec};
use crate::quad::{GL8_NODES, GL8_WEIGHTS};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Norm at which a run is declared unstable.
pub const NORM_LIMIT: f64 = 1.0 + 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::invalid("t_max", format!("must be positive, got {t_max}")));
        }
        let n_steps = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { t_max, dt, n_steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Same horizon with half the step.
    pub fn halved(&self) -> Self {
        Self { t_max: self.t_max, dt: self.dt / 2.0, n_steps: 2 * self.n_steps }
    }

    /// Largest step that resolves the kernel's initial decay, `0.2/ω_c`.
    pub fn max_dt(bath: &BathSpec) -> f64 {
        0.2 / bath.omega_c()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Keep every `record_every`-th step (the last step is always kept).
    pub record_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { record_every: 1 }
    }
}

/// Recorded history of a run. Row `r` of `amps` is the state at `times[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub times: Vec<f64>,
    pub amps: Vec<Vec<Complex64>>,
    pub collective: Vec<Complex64>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.amps.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[Complex64] {
        self.amps.last().map_or(&[], Vec::as_slice)
    }
}

/// Precomputed exponential-integrator weights for one interpolation stencil.
struct Stencil {
    /// Node offsets relative to `t_k`, in steps; the last one is `+1`.
    offsets: Vec<i64>,
    /// `c[i][j] = ∫₀^h e^{−iε_i(h−s)} ℓ_j(s) ds`.
    c: Vec<Vec<Complex64>>,
    /// `Σ_i w_i² c[i][j]`.
    q: Vec<Complex64>,
}

fn lagrange(offsets: &[i64], j: usize, u: f64) -> f64 {
    let xj = offsets[j] as f64;
    offsets
        .iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .map(|(_, &xm)| (u - xm as f64) / (xj - xm as f64))
        .product()
}

impl Stencil {
    fn new(offsets: Vec<i64>, es: &EigenSystem, h: f64) -> Self {
        let c: Vec<Vec<Complex64>> = es
            .energies
            .iter()
            .map(|&eps| {
                (0..offsets.len())
                    .map(|j| {
                        let mut acc = ZERO;
                        for (x, wq) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                            let u = 0.5 * (x + 1.0);
                            let phase = (-I * eps * h * (1.0 - u)).exp();
                            acc += phase * (0.5 * wq * lagrange(&offsets, j, u));
                        }
                        acc * h
                    })
                    .collect()
            })
            .collect();
        let q = (0..offsets.len())
            .map(|j| es.weights.iter().zip(&c).map(|(w, ci)| ci[j] * (w * w)).sum())
            .collect();
        Self { offsets, c, q }
    }
}

/// `h∫ f((shift−u)h) ℓ_r(u) du` over the unit panels `panels` for every
/// Lagrange basis polynomial on `nodes`.
fn product_weights(bath: &BathSpec, h: f64, shift: f64, nodes: &[i64], panels: Range<usize>) -> Vec<Complex64> {
    (0..nodes.len())
        .map(|r| {
            let mut acc = ZERO;
            for panel in panels.clone() {
                for (x, wq) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
                    let u = panel as f64 + 0.5 * (x + 1.0);
                    acc += bath.kernel((shift - u) * h) * (0.5 * wq * lagrange(nodes, r, u));
                }
            }
            acc * h
        })
        .collect()
}

/// Product-integration weights for `K(t_m) = ∫₀^{t_m} f(t_m−τ)S(τ)dτ`
/// with `S` replaced by local cubics. Interval `[t_j, t_{j+1}]` uses nodes
/// `j−1 … j+2`, except the first (`0 … 3`) and the last (`m−3 … m`).
struct Convolution {
    /// `interior[d]`: interval at distance `d = m−j`, nodes `−1 … 2`.
    interior: Vec<[Complex64; 4]>,
    /// Node weight of `S_p` summed over interior intervals, by `l = m−p`.
    node: Vec<Complex64>,
    last: [Complex64; 4],
    /// First interval, nodes `0 … 3`, by `m`.
    first: Vec<[Complex64; 4]>,
    one: Vec<Complex64>,
    two: Vec<Complex64>,
}

fn four(v: Vec<Complex64>) -> [Complex64; 4] {
    [v[0], v[1], v[2], v[3]]
}

impl Convolution {
    fn new(bath: &BathSpec, h: f64, steps: usize) -> Self {
        let mut interior = vec![[ZERO; 4]; steps + 3];
        for (d, slot) in interior.iter_mut().enumerate().skip(2) {
            *slot = four(product_weights(bath, h, d as f64, &[-1, 0, 1, 2], 0..1));
        }
        let node = (0..=steps)
            .map(|l| {
                (0..4)
                    .filter_map(|r| (l + r).checked_sub(1).filter(|&d| d >= 2).map(|d| interior[d][r]))
                    .sum()
            })
            .collect();
        // nodes m−3 … m seen from t_{m−3}; the interval is the panel [2, 3]
        let last = four(product_weights(bath, h, 3.0, &[0, 1, 2, 3], 2..3));
        let first = (0..=steps)
            .map(|m| if m >= 3 { four(product_weights(bath, h, m as f64, &[0, 1, 2, 3], 0..1)) } else { [ZERO; 4] })
            .collect();
        let one = product_weights(bath, h, 1.0, &[0, 1], 0..1);
        let two = product_weights(bath, h, 2.0, &[0, 1, 2], 0..2);
        Self { interior, node, last, first, one, two }
    }

    /// `(K without the S_m term, coefficient of S_m)`; `s` holds `S_0 … S_{m−1}`.
    fn split(&self, m: usize, s: &[Complex64]) -> (Complex64, Complex64) {
        match m {
            1 => (self.one[0] * s[0], self.one[1]),
            2 => (self.two[0] * s[0] + self.two[1] * s[1], self.two[2]),
            _ => {
                let mut k = ZERO;
                for (p, sp) in s[..m].iter().enumerate() {
                    k += sp * self.node[m - p];
                }
                // interior sums reach into intervals d ≥ m that do not exist
                for d in m..=m + 2 {
                    for r in (d + 1 - m)..4 {
                        k -= self.interior[d][r] * s[m + r - d - 1];
                    }
                }
                let first = &self.first[m];
                let mut w_end = self.node[0] + self.last[3];
                for r in 0..4 {
                    if r == m {
                        w_end += first[r];
                    } else {
                        k += first[r] * s[r];
                    }
                }
                for r in 0..3 {
                    k += self.last[r] * s[m - 3 + r];
                }
                (k, w_end)
            }
        }
    }
}

/// Evolves `initial` (site amplitudes, unit norm) on the open or closed
/// chain described by `spec`.
pub fn evolve(initial: &[Complex64], spec: &LatticeSpec, bath: &BathSpec, grid: &TimeGrid) -> Result<Trajectory> {
    let es = eigensystem(&build_lattice(spec))?;
    evolve_with(&es, initial, bath, grid, &EvolveOptions::default())
}

pub fn evolve_with(
    es: &EigenSystem,
    initial: &[Complex64],
    bath: &BathSpec,
    grid: &TimeGrid,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let n = es.len();
    if initial.len() != n {
        return Err(Error::invalid("initial", format!("expected {n} amplitudes, got {}", initial.len())));
    }
    let norm0: f64 = initial.iter().map(|z| z.norm_sqr()).sum();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("initial", format!("must have unit norm, got {norm0}")));
    }
    if grid.dt() > TimeGrid::max_dt(bath) * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "dt",
            format!("{} exceeds 0.2/omega_c = {}", grid.dt(), TimeGrid::max_dt(bath)),
        ));
    }
    if opts.record_every == 0 {
        return Err(Error::invalid("record_every", "must be at least 1"));
    }

    let h = grid.dt();
    let steps = grid.n_steps();
    let stencils = [
        Stencil::new(vec![0, 1], es, h),
        Stencil::new(vec![-1, 0, 1], es, h),
        Stencil::new(vec![-2, -1, 0, 1], es, h),
    ];
    let propagator: Vec<Complex64> = es.energies.iter().map(|&e| (-I * e * h).exp()).collect();
    let conv = Convolution::new(bath, h, steps);

    let mut a = es.to_eigenbasis(initial);
    let mut s_hist: Vec<Complex64> = Vec::with_capacity(steps + 1);
    let mut k_hist: Vec<Complex64> = Vec::with_capacity(steps + 1);
    s_hist.push(es.weights.iter().zip(&a).map(|(w, ai)| ai * w).sum());
    k_hist.push(ZERO);

    let capacity = steps / opts.record_every + 2;
    let mut traj = Trajectory {
        grid: *grid,
        times: Vec::with_capacity(capacity),
        amps: Vec::with_capacity(capacity),
        collective: Vec::with_capacity(capacity),
        norms: Vec::with_capacity(capacity),
    };
    let mut record = |k: usize, a: &[Complex64], s: Complex64, norm: f64| {
        traj.times.push(grid.time(k));
        traj.amps.push(es.to_sites(a));
        traj.collective.push(s);
        traj.norms.push(norm);
    };
    record(0, &a, s_hist[0], norm0);

    for k in 0..steps {
        let m = k + 1;
        let stencil = &stencils[k.min(2)];
        let last = stencil.offsets.len() - 1;

        let (kpart, w_end) = conv.split(m, &s_hist);

        let known_nodes: Vec<Complex64> =
            stencil.offsets[..last].iter().map(|&o| k_hist[(k as i64 + o) as usize]).collect();

        // S_{k+1} = A − Σ_j q_j K_j − q_last (kpart + w_end S_{k+1})
        let mut rhs: Complex64 = es.weights.iter().zip(&propagator).zip(&a).map(|((w, p), ai)| p * ai * w).sum();
        for (q, kj) in stencil.q[..last].iter().zip(&known_nodes) {
            rhs -= q * kj;
        }
        rhs -= stencil.q[last] * kpart;
        let s_new = rhs / (1.0 + stencil.q[last] * w_end);
        let k_new = kpart + w_end * s_new;

        let mut norm = 0.0;
        for i in 0..n {
            let ci = &stencil.c[i];
            let mut forcing = ci[last] * k_new;
            for (cij, kj) in ci[..last].iter().zip(&known_nodes) {
                forcing += cij * kj;
            }
            a[i] = propagator[i] * a[i] - forcing * es.weights[i];
            norm += a[i].norm_sqr();
        }
        s_hist.push(s_new);
        k_hist.push(k_new);

        if !(norm <= NORM_LIMIT) {
            return Err(Error::Instability { norm, time: grid.time(m) });
        }
        if m % opts.record_every == 0 || m == steps {
            record(m, &a, s_new, norm);
        }
    }
    Ok(traj)
}

/// Unit vector on one site (0-based).
pub fn site_state(n_sites: usize, site: usize) -> Result<Vec<Complex64>> {
    if site >= n_sites {
        return Err(Error::invalid("site", format!("{site} out of range for {n_sites} sites")));
    }
    let mut v = vec![ZERO; n_sites];
    v[site] = Complex64::new(1.0, 0.0);
    Ok(v)
}

/// `|α_site(t)|²` at the recorded times (0-based site).
pub fn survival_probability(tr: &Trajectory, site: usize) -> Result<Vec<f64>> {
    if site >= tr.n_sites() {
        return Err(Error::invalid("site", format!("{site} out of range for {} sites", tr.n_sites())));
    }
    Ok(tr.amps.iter().map(|row| row[site].norm_sqr()).collect())
}

/// IPR of the renormalized state; `None` once the chain is empty.
pub fn trajectory_ipr(tr: &Trajectory) -> Vec<Option<f64>> {
    tr.amps
        .iter()
        .zip(&tr.norms)
        .map(|(row, &norm)| if norm < 1e-12 { None } else { inverse_participation_ratio(row).ok() })
        .collect()
}

/// `|⟨reference|α(t)⟩|²` without renormalizing `α(t)`.
pub fn fidelity_series(tr: &Trajectory, reference: &[Complex64]) -> Result<Vec<f64>> {
    if reference.len() != tr.n_sites() {
        return Err(Error::invalid("reference", format!("expected {} amplitudes", tr.n_sites())));
    }
    Ok(tr
        .amps
        .iter()
        .map(|row| row.iter().zip(reference).map(|(a, r)| r.conj() * a).sum::<Complex64>().norm_sqr())
        .collect())
}

/// Mean of `series` over the recorded times inside `[t0, t1]`.
pub fn window_mean(times: &[f64], series: &[f64], t0: f64, t1: f64) -> Result<f64> {
    let picked: Vec<f64> =
        times.iter().zip(series).filter(|(t, _)| **t >= t0 && **t <= t1).map(|(_, v)| *v).collect();
    if picked.is_empty() {
        return Err(Error::invalid("window", format!("no samples in [{t0}, {t1}]")));
    }
    Ok(picked.iter().sum::<f64>() / picked.len() as f64)
}

/// Share of the window's range a maximum must stand out by to count as a
/// peak of the oscillation rather than a ripple on it.
pub const PEAK_PROMINENCE: f64 = 0.5;

/// Period from the mean spacing of prominent maxima in `[t0, t1]`, each
/// refined by a parabola through its neighbours.
pub fn estimate_period(times: &[f64], series: &[f64], t0: f64, t1: f64) -> Result<f64> {
    if times.len() != series.len() {
        return Err(Error::invalid("series", "times and values differ in length"));
    }
    if !(t1 > t0) {
        return Err(Error::invalid("window", format!("empty window [{t0}, {t1}]")));
    }
    let idx: Vec<usize> = (0..times.len()).filter(|&k| times[k] >= t0 && times[k] <= t1).collect();
    if idx.len() < 5 {
        return Err(Error::NonOscillatory { extrema: 0 });
    }
    let y: Vec<f64> = idx.iter().map(|&k| series[k]).collect();
    let t: Vec<f64> = idx.iter().map(|&k| times[k]).collect();
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::NonOscillatory { extrema: 0 });
    }

    let mut peaks = Vec::new();
    for k in 1..y.len() - 1 {
        if !(y[k] > y[k - 1] && y[k] >= y[k + 1]) {
            continue;
        }
        let left_base = y[..k].iter().rev().take_while(|&&v| v <= y[k]).copied().fold(y[k], f64::min);
        let right_base = y[k + 1..].iter().take_while(|&&v| v <= y[k]).copied().fold(y[k], f64::min);
        let prominence = y[k] - left_base.max(right_base);
        if prominence >= PEAK_PROMINENCE * range {
            let (ym, y0, yp) = (y[k - 1], y[k], y[k + 1]);
            let denom = ym - 2.0 * y0 + yp;
            let shift = if denom != 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
            let step = t[k + 1] - t[k];
            peaks.push(t[k] + shift.clamp(-1.0, 1.0) * step);
        }
    }
    // a run of peaks implies a minimum between each pair
    let extrema = if peaks.is_empty() { 0 } else { 2 * peaks.len() - 1 };
    if peaks.len() < 2 {
        return Err(Error::NonOscillatory { extrema });
    }
    Ok((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}
