#![allow(dead_code)]

use aah_core::lattice::{build_lattice, eigensystem};
use aah_core::{Boundary, EigenSystem, LatticeSpec};
use std::f64::consts::PI;

pub fn open(n: usize, delta: f64, beta: f64, phi: f64) -> LatticeSpec {
    LatticeSpec::open(n, delta, beta, phi).unwrap()
}

pub fn ring(n: usize, delta: f64, beta: f64, phi: f64) -> LatticeSpec {
    LatticeSpec::new(n, delta, beta, phi, Boundary::Periodic).unwrap()
}

pub fn system(spec: &LatticeSpec) -> EigenSystem {
    eigensystem(&build_lattice(spec)).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Ohmic-family spectral density written out directly.
pub fn density(eta: f64, s: f64, wc: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    eta * w * (w / wc).powf(s - 1.0) * (-w / wc).exp()
}

/// `∫₀^∞ J(ω)/(E−ω) dω` for `E<0`, Simpson on `ω = ω_c u/(1−u)`.
pub fn self_energy_below(eta: f64, s: f64, wc: f64, e: f64) -> f64 {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = wc * u / (1.0 - u);
        let jac = wc / (1.0 - u).powi(2);
        density(eta, s, wc, w) / (e - w) * jac
    };
    simpson(g, 0.0, 1.0, 400_000)
}

/// Principal value for `E>0` by subtracting `J(E)` on `[0, 2E]`, where the
/// subtracted term integrates to zero by symmetry.
pub fn self_energy_above(eta: f64, s: f64, wc: f64, e: f64) -> f64 {
    let je = density(eta, s, wc, e);
    let dj = {
        let h = 1e-5 * e;
        (density(eta, s, wc, e + h) - density(eta, s, wc, e - h)) / (2.0 * h)
    };
    let near = |w: f64| if (w - e).abs() < 1e-12 * e { -dj } else { (density(eta, s, wc, w) - je) / (e - w) };
    let inner = simpson(near, 0.0, 2.0 * e, 200_000);
    let tail = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let w = 2.0 * e + wc * u / (1.0 - u);
        density(eta, s, wc, w) / (e - w) * wc / (1.0 - u).powi(2)
    };
    inner + simpson(tail, 0.0, 1.0, 400_000)
}

pub fn golden() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

pub const MINUS_PI: f64 = -PI;
