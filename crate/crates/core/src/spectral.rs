//! Bound states of the chain coupled to the common bath.
//!
//! The coupling is the rank-one operator `Σ(E)·𝟙𝟙ᵀ`, so the determinant
//! condition collapses to the scalar secular function
//! `F(E) = 1 + Σ(E)·S(E)` with `S(E) = Σ_i w_i²/(ε_i − E)`. Between two
//! consecutive coupled levels `S` runs monotonically from −∞ to +∞, which is
//! what makes a sign-change scan reliable.
//!
//! Amplitudes are normalized on the chain. The bath then carries the extra
//! weight `d`, so the full state has norm `1 + d`.

use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::lattice::{find_gaps, inverse_participation_ratio, peak_site, EigenSystem, Gap, GapKind};

/// Closest approach to a lattice level at which `F` is still evaluated.
pub const POLE_GUARD: f64 = 1e-12;
/// Distance kept from `E = 0` by every root search.
pub const ZERO_GUARD: f64 = 1e-6;
/// Default threshold on `|w_i|` below which a level is dark.
pub const DARK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    /// Below the whole lattice spectrum.
    DbsGround,
    /// Inside an interior gap with `E < 0`.
    DbsGap,
    /// Inside an interior gap with `E > 0`, where the bath continuum lives.
    Bic,
    /// A lattice level with zero collective weight, untouched by the bath.
    Dark,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::DbsGround => "dbs_ground",
            BoundKind::DbsGap => "dbs_gap",
            BoundKind::Bic => "bic",
            BoundKind::Dark => "dark",
        }
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub energy: f64,
    /// Chain amplitudes, `Σ_n α_n² = 1`.
    pub amplitudes: Vec<f64>,
    /// The same state in the lattice eigenbasis.
    pub coefficients: Vec<f64>,
    pub kind: BoundKind,
    pub ipr: f64,
    /// `d = (Σ_n α_n)² · (−Σ'(E))`. Principal-valued for a BIC, where it
    /// has no emission meaning.
    pub emission: f64,
    pub gap: (f64, f64),
    /// `dF/dE` at the root.
    pub secular_slope: f64,
    pub sum_alpha: f64,
    pub self_energy: f64,
    /// 0-based site with the largest probability.
    pub loc_site: usize,
}

impl BoundState {
    /// Share of the full state's weight held by the bath, `d/(1+d)`.
    pub fn bath_fraction(&self) -> f64 {
        self.emission / (1.0 + self.emission)
    }

    pub fn emission_is_physical(&self) -> bool {
        matches!(self.kind, BoundKind::DbsGround | BoundKind::DbsGap)
    }

    pub fn amplitudes_complex(&self) -> Vec<Complex64> {
        self.amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect()
    }

    /// `‖(H_S + Σ(E)𝟙𝟙ᵀ − E)α‖`, evaluated in the eigenbasis.
    pub fn null_residual(&self, es: &EigenSystem) -> f64 {
        let s: f64 = self.coefficients.iter().zip(&es.weights).map(|(m, w)| m * w).sum();
        es.energies
            .iter()
            .zip(&es.weights)
            .zip(&self.coefficients)
            .map(|((e, w), m)| {
                let r = (e - self.energy) * m + w * self.self_energy * s;
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Indices of levels whose collective weight `|w_i|` is at most `tol`.
pub fn dark_levels(es: &EigenSystem, tol: f64) -> Vec<usize> {
    es.weights.iter().enumerate().filter(|(_, w)| w.abs() <= tol).map(|(i, _)| i).collect()
}

fn pole_check(e: f64, es: &EigenSystem) -> Result<()> {
    for (i, &eps) in es.energies.iter().enumerate() {
        let distance = (e - eps).abs();
        if distance < POLE_GUARD {
            return Err(Error::PoleProximity { energy: e, index: i, distance });
        }
    }
    Ok(())
}

/// `S(E)` and `S'(E)`.
fn resolvent_sums(e: f64, es: &EigenSystem) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    for (&eps, &w) in es.energies.iter().zip(&es.weights) {
        let inv = 1.0 / (eps - e);
        s += w * w * inv;
        ds += w * w * inv * inv;
    }
    (s, ds)
}

/// `F(E) = 1 + Σ(E)·Σ_i w_i²/(ε_i − E)`.
pub fn secular_value(e: f64, es: &EigenSystem, bath: &BathSpec) -> Result<f64> {
    pole_check(e, es)?;
    let sigma = bath.self_energy(e)?;
    Ok(1.0 + sigma * resolvent_sums(e, es).0)
}

/// `F'(E) = Σ'(E)S(E) + Σ(E)S'(E)`.
pub fn secular_derivative(e: f64, es: &EigenSystem, bath: &BathSpec) -> Result<f64> {
    pole_check(e, es)?;
    let sigma = bath.self_energy(e)?;
    let dsigma = bath.self_energy_derivative(e)?;
    let (s, ds) = resolvent_sums(e, es);
    Ok(dsigma * s + sigma * ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Interior gaps narrower than this are skipped.
    pub min_gap_width: f64,
    /// Uniform grid points per scanned interval.
    pub grid_points: usize,
    pub include_positive: bool,
    /// Explicit gap list; when `None`, gaps come from `find_gaps`.
    pub gaps: Option<Vec<Gap>>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { min_gap_width: 0.05, grid_points: 2000, include_positive: false, gaps: None }
    }
}

/// A bracketed sign change whose refinement did not reach a root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootWarning {
    pub lower: f64,
    pub upper: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundStates {
    pub states: Vec<BoundState>,
    pub warnings: Vec<RootWarning>,
}

impl BoundStates {
    pub fn of_kind(&self, kind: BoundKind) -> impl Iterator<Item = &BoundState> {
        self.states.iter().filter(move |b| b.kind == kind)
    }

    pub fn ground(&self) -> Option<&BoundState> {
        self.of_kind(BoundKind::DbsGround).next()
    }
}

/// Grid on `(lo, hi)` with extra points crowding towards the ends that sit
/// on a lattice level, where `F` varies fastest.
fn scan_grid(lo: f64, hi: f64, n: usize, crowd_lo: bool, crowd_hi: bool) -> Vec<f64> {
    let width = hi - lo;
    let mut pts: Vec<f64> = (1..n.max(2)).map(|k| lo + width * k as f64 / n.max(2) as f64).collect();
    for k in 2..=11 {
        let off = (width * 10f64.powi(-k)).max(10.0 * POLE_GUARD);
        if off >= width / 2.0 {
            continue;
        }
        if crowd_lo {
            pts.push(lo + off);
        }
        if crowd_hi {
            pts.push(hi - off);
        }
    }
    if !crowd_lo {
        pts.push(lo);
    }
    if !crowd_hi {
        pts.push(hi);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

enum Refined {
    Root(f64),
    Stalled(RootWarning),
}

fn refine<F, D>(f: &F, df: &D, mut lo: f64, mut hi: f64, mut flo: f64) -> Result<Refined>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let (a, b) = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    let mut fm = f(mid)?;
    for _ in 0..200 {
        if fm.abs() <= 1e-10 || hi - lo <= 1e-12 {
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        fm = f(mid)?;
    }
    let residual = fm.abs();
    if residual > 1e-8 + df(mid)?.abs() * 1e-12 {
        return Ok(Refined::Stalled(RootWarning { lower: a, upper: b, residual }));
    }
    Ok(Refined::Root(mid))
}

/// All sign changes of `F` on the grid over `(lo, hi)`, refined by bisection.
pub fn secular_roots_in(
    es: &EigenSystem,
    bath: &BathSpec,
    lo: f64,
    hi: f64,
    grid_points: usize,
) -> Result<(Vec<f64>, Vec<RootWarning>)> {
    let crowd_lo = es.energies.iter().any(|&e| (e - lo).abs() < 1e-9);
    let crowd_hi = es.energies.iter().any(|&e| (e - hi).abs() < 1e-9);
    let f = |e: f64| secular_value(e, es, bath);
    let df = |e: f64| secular_derivative(e, es, bath);
    let pts = scan_grid(lo, hi, grid_points, crowd_lo, crowd_hi);
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    let mut prev = (pts[0], f(pts[0])?);
    for &x in &pts[1..] {
        let fx = f(x)?;
        if fx == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && (fx < 0.0) != (prev.1 < 0.0) {
            match refine(&f, &df, prev.0, x, prev.1)? {
                Refined::Root(r) => roots.push(r),
                Refined::Stalled(w) => warnings.push(w),
            }
        }
        prev = (x, fx);
    }
    Ok((roots, warnings))
}

/// Roots of `F` below `upper`, scanning the region under the lowest coupled
/// level and every interval between consecutive coupled levels. Dark levels
/// are not poles of `F` and are skipped.
pub fn roots_between_poles(
    es: &EigenSystem,
    bath: &BathSpec,
    upper: f64,
    grid_points: usize,
) -> Result<(Vec<f64>, Vec<RootWarning>)> {
    let poles: Vec<f64> = es
        .energies
        .iter()
        .zip(&es.weights)
        .filter(|(_, w)| w.abs() > DARK_TOL)
        .map(|(e, _)| *e)
        .filter(|&e| e < upper)
        .collect();
    let mut roots = Vec::new();
    let mut warnings = Vec::new();
    if poles.is_empty() || bath.eta() == 0.0 {
        return Ok((roots, warnings));
    }
    let (mut lo, _) = ground_interval(es, bath);
    lo = lo.min(poles[0] - 1.0);
    while secular_value(lo, es, bath)? <= 0.0 && lo > -1e12 {
        lo *= 2.0;
    }
    let mut edges = vec![lo];
    edges.extend(&poles);
    edges.push(upper);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 2.0 * POLE_GUARD {
            continue;
        }
        let (r, warn) = secular_roots_in(es, bath, a, b, grid_points)?;
        roots.extend(r);
        warnings.extend(warn);
    }
    roots.sort_by(f64::total_cmp);
    Ok((roots, warnings))
}

fn ground_interval(es: &EigenSystem, bath: &BathSpec) -> (f64, f64) {
    let emin = es.min_energy();
    let scale = 50.0 * bath.eta() * bath.omega_c() * es.len() as f64 / emin.abs().max(1.0);
    let top = (emin - 1e-6).min(-ZERO_GUARD);
    (top - scale.max(1.0), top)
}

/// Every bound state below the spectrum, in the interior gaps with `E < 0`
/// and, optionally, principal-value roots in interior gaps with `E > 0`.
pub fn find_bound_states(es: &EigenSystem, bath: &BathSpec, opts: &SearchOptions) -> Result<BoundStates> {
    if opts.grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least 2"));
    }
    let gaps = match &opts.gaps {
        Some(g) => g.clone(),
        None => find_gaps(es, opts.min_gap_width)?,
    };
    let mut out = BoundStates::default();
    if bath.eta() == 0.0 {
        return Ok(out);
    }

    // ground root: widen the bracket until F changes sign
    let (mut lo, hi) = ground_interval(es, bath);
    let width0 = hi - lo;
    for _ in 0..30 {
        if secular_value(lo, es, bath)? > 0.0 {
            break;
        }
        lo -= 2.0 * (hi - lo).max(width0);
    }
    let mut spans: Vec<(f64, f64, BoundKind, (f64, f64))> = Vec::new();
    spans.push((lo, hi, BoundKind::DbsGround, (f64::NEG_INFINITY, es.min_energy())));
    for g in gaps.iter().filter(|g| g.kind == GapKind::Interior) {
        if g.lower < -ZERO_GUARD {
            spans.push((g.lower, g.upper.min(-ZERO_GUARD), BoundKind::DbsGap, (g.lower, g.upper)));
        }
        if opts.include_positive && g.upper > ZERO_GUARD {
            spans.push((g.lower.max(ZERO_GUARD), g.upper, BoundKind::Bic, (g.lower, g.upper)));
        }
    }

    for (a, b, kind, gap) in spans {
        if b <= a {
            continue;
        }
        let (roots, warnings) = secular_roots_in(es, bath, a, b, opts.grid_points)?;
        out.warnings.extend(warnings);
        for r in roots {
            let mut state = reconstruct_mode(r, es, bath)?;
            if state.kind != BoundKind::Dark {
                state.kind = kind;
            }
            state.gap = gap;
            out.states.push(state);
        }
    }
    out.states.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

fn gap_containing(e: f64, es: &EigenSystem) -> (f64, f64) {
    let below = es.energies.iter().copied().filter(|&x| x < e).fold(f64::NEG_INFINITY, f64::max);
    let above = es.energies.iter().copied().filter(|&x| x > e).fold(f64::INFINITY, f64::min);
    (below, above)
}

fn sign_fixed(mut v: Vec<f64>, peak: usize) -> Vec<f64> {
    if v[peak] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Bound state at a root `E` of the secular function.
pub fn reconstruct_mode(e: f64, es: &EigenSystem, bath: &BathSpec) -> Result<BoundState> {
    let n = es.len();
    if let Some(i) = dark_levels(es, DARK_TOL).into_iter().find(|&i| (es.energies[i] - e).abs() < 1e-9) {
        let amplitudes = es.mode(i);
        let mut coefficients = vec![0.0; n];
        coefficients[i] = 1.0;
        return Ok(BoundState {
            energy: es.energies[i],
            ipr: inverse_participation_ratio(&amplitudes)?,
            loc_site: peak_site(&amplitudes),
            amplitudes,
            coefficients,
            kind: BoundKind::Dark,
            emission: 0.0,
            gap: (es.energies[i], es.energies[i]),
            secular_slope: f64::NAN,
            sum_alpha: 0.0,
            self_energy: f64::NAN,
        });
    }

    let f = secular_value(e, es, bath)?;
    let slope = secular_derivative(e, es, bath)?;
    if f.abs() > 1e-8 + slope.abs() * 1e-12 {
        return Err(Error::Domain(format!("E = {e} is not a secular root (F = {f:.3e})")));
    }
    let sigma = bath.self_energy(e)?;

    let raw: Vec<f64> = es.energies.iter().zip(&es.weights).map(|(eps, w)| w / (eps - e)).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    let coeffs: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let mut amps = vec![0.0; n];
    for (i, c) in coeffs.iter().enumerate() {
        let col = es.modes.column(i);
        for k in 0..n {
            amps[k] += c * col[k];
        }
    }
    let peak = peak_site(&amps);
    let flip = amps[peak] < 0.0;
    let amplitudes = sign_fixed(amps, peak);
    let coefficients = if flip { coeffs.iter().map(|c| -c).collect() } else { coeffs };
    let sum_alpha: f64 = amplitudes.iter().sum();
    let emission = sum_alpha * sum_alpha * -bath.self_energy_derivative(e)?;
    let kind = if e < es.min_energy() {
        BoundKind::DbsGround
    } else if e < 0.0 {
        BoundKind::DbsGap
    } else {
        BoundKind::Bic
    };
    Ok(BoundState {
        energy: e,
        ipr: inverse_participation_ratio(&amplitudes)?,
        loc_site: peak,
        amplitudes,
        coefficients,
        kind,
        emission,
        gap: gap_containing(e, es),
        secular_slope: slope,
        sum_alpha,
        self_energy: sigma,
    })
}

/// Both estimators of a bound state's long-time weight in the evolution of
/// `initial`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundWeight {
    /// `⟨ψ(0)| Res_{E_b} G |ψ(0)⟩`, from the resolvent residue.
    pub residue: f64,
    /// `|⟨α_b|ψ(0)⟩|²/(1+d)`.
    pub projection: f64,
}

impl BoundWeight {
    pub fn value(&self) -> f64 {
        self.residue
    }
}

/// Long-time return-amplitude coefficient of bound state `b`: the
/// component of `initial` that stays locked to `e^{−iE_b t}`.
pub fn bound_state_weight(
    b: &BoundState,
    initial: &[Complex64],
    es: &EigenSystem,
    bath: &BathSpec,
) -> Result<BoundWeight> {
    if initial.len() != es.len() {
        return Err(Error::invalid("initial", format!("expected {} amplitudes, got {}", es.len(), initial.len())));
    }
    let a = es.to_eigenbasis(initial);
    if b.kind == BoundKind::Dark {
        let overlap: Complex64 = b.coefficients.iter().zip(&a).map(|(m, ai)| ai * m).sum();
        let w = overlap.norm_sqr();
        return Ok(BoundWeight { residue: w, projection: w });
    }
    let e = b.energy;
    let slope = secular_derivative(e, es, bath)?;
    if slope.abs() < 1e-10 {
        return Err(Error::DegenerateRoot { energy: e, slope });
    }
    let u_dot_a: Complex64 =
        es.energies.iter().zip(&es.weights).zip(&a).map(|((eps, w), ai)| ai * (w / (eps - e))).sum();
    let residue = u_dot_a.norm_sqr() * b.self_energy / slope;

    let m_dot_a: Complex64 = b.coefficients.iter().zip(&a).map(|(m, ai)| ai * m).sum();
    let projection = m_dot_a.norm_sqr() / (1.0 + b.emission);
    if (residue - projection).abs() > 1e-3 {
        return Err(Error::EstimatorMismatch { residue, projection });
    }
    Ok(BoundWeight { residue, projection })
}
