//! C interface to `aah-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_find`/`*_evolve` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`AahStatus`]; on failure the message is kept per thread and can be copied
//! out with [`aah_last_error_message`]. Panics never cross the boundary.
//! Site and level indices are 0-based.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use aah_core::dynamics::{evolve_with, site_state, EvolveOptions, TimeGrid, Trajectory};
use aah_core::spectral::{find_bound_states, BoundKind, BoundStates, SearchOptions};
use aah_core::{BathSpec, Boundary, EigenSystem, Error, LatticeSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AahStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    OutOfRange = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AahBoundKind {
    DbsGround = 0,
    DbsGap = 1,
    Bic = 2,
    Dark = 3,
}

impl From<BoundKind> for AahBoundKind {
    fn from(k: BoundKind) -> Self {
        match k {
            BoundKind::DbsGround => AahBoundKind::DbsGround,
            BoundKind::DbsGap => AahBoundKind::DbsGap,
            BoundKind::Bic => AahBoundKind::Bic,
            BoundKind::Dark => AahBoundKind::Dark,
        }
    }
}

/// Scalar description of one bound state.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AahBoundInfo {
    pub kind: AahBoundKind,
    pub energy: f64,
    pub ipr: f64,
    /// `(Σα)²·(−Σ')`; principal-valued for a BIC.
    pub emission: f64,
    pub sum_alpha: f64,
    pub loc_site: usize,
}

/// Lattice, bath and the diagonalized chain.
pub struct AahSystem {
    lattice: LatticeSpec,
    bath: BathSpec,
    eigen: EigenSystem,
}

pub struct AahBoundStates {
    inner: BoundStates,
}

pub struct AahTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: AahStatus, msg: impl Into<String>) -> AahStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> AahStatus {
    let status = if e.is_numerical() { AahStatus::Numerical } else { AahStatus::InvalidArgument };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> AahStatus) -> AahStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AahStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> AahStatus {
    if out.is_null() {
        return fail(AahStatus::NullPointer, "output buffer is null");
    }
    if len < src.len() {
        return fail(AahStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    AahStatus::Ok
}

fn boxed<T>(value: T, out: *mut *mut T) -> AahStatus {
    // SAFETY: callers check `out` for null before computing `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    AahStatus::Ok
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len - 1` bytes. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn aah_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds and diagonalizes the chain. `periodic` selects the ring.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn aah_system_new(
    n_sites: usize,
    delta: f64,
    beta: f64,
    phi: f64,
    periodic: bool,
    eta: f64,
    s: f64,
    omega_c: f64,
    out: *mut *mut AahSystem,
) -> AahStatus {
    guard(|| {
        if out.is_null() {
            return fail(AahStatus::NullPointer, "out is null");
        }
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Open };
        let built = LatticeSpec::new(n_sites, delta, beta, phi, boundary).and_then(|lattice| {
            let bath = BathSpec::new(eta, s, omega_c)?;
            let eigen = aah_core::lattice::eigensystem(&aah_core::lattice::build_lattice(&lattice))?;
            Ok(AahSystem { lattice, bath, eigen })
        });
        match built {
            Ok(sys) => boxed(sys, out),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `sys` must be null or a handle from [`aah_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aah_system_free(sys: *mut AahSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of sites, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aah_system_len(sys: *const AahSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.lattice.n_sites())
}

/// Writes the ascending lattice energies into `out[0..len]`.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aah_system_energies(sys: *const AahSystem, out: *mut f64, len: usize) -> AahStatus {
    guard(|| match sys.as_ref() {
        None => fail(AahStatus::NullPointer, "system is null"),
        Some(s) => copy_out(&s.eigen.energies, out, len),
    })
}

/// Self-energy `Σ(E)` of the system's bath.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for one double.
#[no_mangle]
pub unsafe extern "C" fn aah_system_self_energy(sys: *const AahSystem, energy: f64, out: *mut f64) -> AahStatus {
    guard(|| {
        let Some(s) = sys.as_ref() else { return fail(AahStatus::NullPointer, "system is null") };
        if out.is_null() {
            return fail(AahStatus::NullPointer, "out is null");
        }
        match s.bath.self_energy(energy) {
            Ok(v) => {
                *out = v;
                AahStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Searches for bound states below the spectrum and in every interior gap;
/// with `include_positive` the gaps above `E = 0` are scanned too.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn aah_bound_states_find(
    sys: *const AahSystem,
    include_positive: bool,
    out: *mut *mut AahBoundStates,
) -> AahStatus {
    guard(|| {
        let Some(s) = sys.as_ref() else { return fail(AahStatus::NullPointer, "system is null") };
        if out.is_null() {
            return fail(AahStatus::NullPointer, "out is null");
        }
        let opts = SearchOptions { include_positive, ..SearchOptions::default() };
        match find_bound_states(&s.eigen, &s.bath, &opts) {
            Ok(inner) => boxed(AahBoundStates { inner }, out),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `bs` must be null or a handle from [`aah_bound_states_find`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aah_bound_states_free(bs: *mut AahBoundStates) {
    if !bs.is_null() {
        drop(Box::from_raw(bs));
    }
}

/// # Safety
/// `bs` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aah_bound_states_count(bs: *const AahBoundStates) -> usize {
    bs.as_ref().map_or(0, |b| b.inner.states.len())
}

/// # Safety
/// `bs` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn aah_bound_states_get(bs: *const AahBoundStates, index: usize, out: *mut AahBoundInfo) -> AahStatus {
    guard(|| {
        let Some(b) = bs.as_ref() else { return fail(AahStatus::NullPointer, "bound states are null") };
        if out.is_null() {
            return fail(AahStatus::NullPointer, "out is null");
        }
        let Some(st) = b.inner.states.get(index) else {
            return fail(AahStatus::OutOfRange, format!("index {index} of {}", b.inner.states.len()));
        };
        *out = AahBoundInfo {
            kind: st.kind.into(),
            energy: st.energy,
            ipr: st.ipr,
            emission: st.emission,
            sum_alpha: st.sum_alpha,
            loc_site: st.loc_site,
        };
        AahStatus::Ok
    })
}

/// Chain amplitudes of bound state `index`, normalized on the chain.
///
/// # Safety
/// `bs` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aah_bound_states_amplitudes(
    bs: *const AahBoundStates,
    index: usize,
    out: *mut f64,
    len: usize,
) -> AahStatus {
    guard(|| {
        let Some(b) = bs.as_ref() else { return fail(AahStatus::NullPointer, "bound states are null") };
        match b.inner.states.get(index) {
            None => fail(AahStatus::OutOfRange, format!("index {index} of {}", b.inner.states.len())),
            Some(st) => copy_out(&st.amplitudes, out, len),
        }
    })
}

/// Evolves a single excitation starting on `site`, recording every
/// `record_every`-th step.
///
/// # Safety
/// `sys` must be a live handle and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn aah_evolve_site(
    sys: *const AahSystem,
    site: usize,
    t_max: f64,
    dt: f64,
    record_every: usize,
    out: *mut *mut AahTrajectory,
) -> AahStatus {
    guard(|| {
        let Some(s) = sys.as_ref() else { return fail(AahStatus::NullPointer, "system is null") };
        if out.is_null() {
            return fail(AahStatus::NullPointer, "out is null");
        }
        let run = site_state(s.lattice.n_sites(), site).and_then(|init| {
            let grid = TimeGrid::new(t_max, dt)?;
            evolve_with(&s.eigen, &init, &s.bath, &grid, &EvolveOptions { record_every })
        });
        match run {
            Ok(inner) => boxed(AahTrajectory { inner }, out),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `tr` must be null or a handle from [`aah_evolve_site`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aah_trajectory_free(tr: *mut AahTrajectory) {
    if !tr.is_null() {
        drop(Box::from_raw(tr));
    }
}

/// Number of recorded times, or 0 for a null handle.
///
/// # Safety
/// `tr` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aah_trajectory_len(tr: *const AahTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.inner.len())
}

/// # Safety
/// `tr` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aah_trajectory_times(tr: *const AahTrajectory, out: *mut f64, len: usize) -> AahStatus {
    guard(|| match tr.as_ref() {
        None => fail(AahStatus::NullPointer, "trajectory is null"),
        Some(t) => copy_out(&t.inner.times, out, len),
    })
}

/// Site populations `|α_n|²` at recorded time `index`.
///
/// # Safety
/// `tr` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn aah_trajectory_populations(
    tr: *const AahTrajectory,
    index: usize,
    out: *mut f64,
    len: usize,
) -> AahStatus {
    guard(|| {
        let Some(t) = tr.as_ref() else { return fail(AahStatus::NullPointer, "trajectory is null") };
        match t.inner.amps.get(index) {
            None => fail(AahStatus::OutOfRange, format!("index {index} of {}", t.inner.len())),
            Some(row) => {
                let pops: Vec<f64> = row.iter().map(|z| z.norm_sqr()).collect();
                copy_out(&pops, out, len)
            }
        }
    })
}
