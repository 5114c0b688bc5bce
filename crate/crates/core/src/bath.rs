//! Bosonic reservoir: spectral density, self-energy on both half-axes and the
//! memory kernel of the time-domain equations.
//!
//! For `E > 0` the self-energy integral is singular at `ω = E` and its
//! Cauchy principal value is returned. The singular window `[0, 2E]` is folded
//! onto itself around `E`, which turns the integrand into the regular
//! difference quotient `[J(E−x) − J(E+x)]/x`.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS};

/// Largest accepted quadrature error estimate for self-energy integrals.
pub const MAX_QUAD_ERROR: f64 = 1e-9;

/// Parameters of `J(ω) = η ω (ω/ω_c)^{s−1} e^{−ω/ω_c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    eta: f64,
    s: f64,
    omega_c: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        Self { eta: 0.1, s: 1.0, omega_c: 10.0 }
    }
}

impl BathSpec {
    pub fn new(eta: f64, s: f64, omega_c: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::invalid("eta", format!("must be finite and non-negative, got {eta}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::invalid("s", format!("must be finite and positive, got {s}")));
        }
        if !(omega_c.is_finite() && omega_c > 0.0) {
            return Err(Error::invalid("omega_c", format!("must be finite and positive, got {omega_c}")));
        }
        Ok(Self { eta, s, omega_c })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(eta, self.s, self.omega_c)
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(self.eta, s, self.omega_c)
    }

    /// `J(ω)` for `ω ≥ 0`.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("spectral density needs ω ≥ 0, got {omega}")));
        }
        Ok(self.j(omega))
    }

    pub(crate) fn j(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        self.eta * omega * x.powf(self.s - 1.0) * (-x).exp()
    }

    fn j_prime(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.j(omega) * (self.s / omega - 1.0 / self.omega_c)
    }

    /// `∫₀^∞ J(ω) dω = η ω_c² Γ(s+1)`.
    pub fn total_weight(&self) -> f64 {
        self.eta * self.omega_c * self.omega_c * gamma(self.s + 1.0)
    }

    /// `Σ(E) = ∫₀^∞ J(ω)/(E−ω) dω`, principal-valued for `E > 0`.
    pub fn self_energy(&self, e: f64) -> Result<f64> {
        check_energy(e)?;
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        if e < 0.0 {
            let r = integrate_to_infinity(|w| self.j(w) / (e - w), 0.0, self.omega_c, DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS);
            return accept(r.value, r.error);
        }
        let near = integrate(
            |x| {
                if x <= 0.0 {
                    -2.0 * self.j_prime(e)
                } else {
                    (self.j(e - x) - self.j(e + x)) / x
                }
            },
            0.0,
            e,
            DEFAULT_ABS_TOL,
            DEFAULT_MAX_INTERVALS,
        );
        let tail = integrate_to_infinity(|w| self.j(w) / (e - w), 2.0 * e, self.omega_c, DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS);
        accept(near.value + tail.value, near.error + tail.error)
    }

    /// `∫₀^∞ J(ω)/(E−ω)² dω = −Σ'(E)` for `E < 0`.
    pub fn self_energy_slope(&self, e: f64) -> Result<f64> {
        if !(e < 0.0) {
            return Err(Error::Domain(format!("self-energy slope needs E < 0, got {e}")));
        }
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let r = integrate_to_infinity(|w| self.j(w) / ((e - w) * (e - w)), 0.0, self.omega_c, DEFAULT_ABS_TOL, DEFAULT_MAX_INTERVALS);
        accept(r.value, r.error)
    }

    /// `dΣ/dE` on either half-axis (principal-valued for `E > 0`).
    pub fn self_energy_derivative(&self, e: f64) -> Result<f64> {
        check_energy(e)?;
        if e < 0.0 {
            return self.self_energy_slope(e).map(|v| -v);
        }
        if self.eta == 0.0 {
            return Ok(0.0);
        }
        let near = integrate(
            |x| {
                if x <= 0.0 {
                    0.0
                } else {
                    (self.j_prime(e - x) - self.j_prime(e + x)) / x
                }
            },
            0.0,
            e,
            DEFAULT_ABS_TOL,
            DEFAULT_MAX_INTERVALS,
        );
        let tail = integrate_to_infinity(
            |w| self.j(w) / ((e - w) * (e - w)),
            2.0 * e,
            self.omega_c,
            DEFAULT_ABS_TOL,
            DEFAULT_MAX_INTERVALS,
        );
        accept(self.j(2.0 * e) / e + near.value - tail.value, near.error + tail.error)
    }

    /// `f(t) = η ω_c^{1−s} Γ(s+1) / (1/ω_c + it)^{s+1}`, the Fourier transform
    /// `∫₀^∞ J(ω) e^{−iωt} dω`. The complex power uses the principal branch.
    pub fn memory_kernel(&self, t: f64) -> Result<Complex64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("memory kernel needs t ≥ 0, got {t}")));
        }
        Ok(self.kernel(t))
    }

    pub(crate) fn kernel(&self, t: f64) -> Complex64 {
        let prefactor = self.eta * self.omega_c.powf(1.0 - self.s) * gamma(self.s + 1.0);
        let z = Complex64::new(1.0 / self.omega_c, t);
        prefactor * z.powf(-(self.s + 1.0))
    }
}

/// Ohmic (`s = 1`) self-energy below zero in closed form,
/// `η[−ω_c − E e^{−E/ω_c} E₁(−E/ω_c)]`.
pub fn ohmic_self_energy_closed_form(e: f64, eta: f64, omega_c: f64) -> Result<f64> {
    if !(e < 0.0) {
        return Err(Error::Domain(format!("closed form holds for E < 0, got {e}")));
    }
    let x = -e / omega_c;
    let e1 = statrs::function::exponential::integral(x, 1)
        .ok_or_else(|| Error::Domain(format!("exponential integral undefined at {x}")))?;
    Ok(eta * (-omega_c - e * x.exp() * e1))
}

fn check_energy(e: f64) -> Result<()> {
    if !e.is_finite() {
        return Err(Error::Domain(format!("energy must be finite, got {e}")));
    }
    if e == 0.0 {
        return Err(Error::Domain("self-energy is not evaluated at E = 0".into()));
    }
    Ok(())
}

fn accept(value: f64, error: f64) -> Result<f64> {
    if !value.is_finite() || error > MAX_QUAD_ERROR {
        return Err(Error::Quadrature { estimate: error });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn density_values() {
        let b = BathSpec::default();
        assert_eq!(b.spectral_density(0.0).unwrap(), 0.0);
        assert_relative_eq!(b.spectral_density(10.0).unwrap(), (-1.0f64).exp(), max_relative = 1e-14);
        assert!(b.spectral_density(-1.0).is_err());
    }

    #[test]
    fn super_ohmic_peak() {
        let b = BathSpec::new(0.1, 3.0, 10.0).unwrap();
        let peak = b.j(30.0);
        assert!(peak > b.j(29.9) && peak > b.j(30.1));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BathSpec::new(-0.1, 1.0, 10.0).is_err());
        assert!(BathSpec::new(0.1, 0.0, 10.0).is_err());
        assert!(BathSpec::new(0.1, 1.0, 0.0).is_err());
        assert!(BathSpec::new(0.0, 1.0, 10.0).is_ok());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let b = BathSpec::default();
        for &e in &[-0.01, -1.0, -5.0, -23.0, -200.0] {
            let q = b.self_energy(e).unwrap();
            let c = ohmic_self_energy_closed_form(e, 0.1, 10.0).unwrap();
            assert!((q - c).abs() < 1e-8, "E={e}: {q} vs {c}");
        }
    }

    #[test]
    fn kernel_at_origin() {
        let b = BathSpec::default();
        let f0 = b.memory_kernel(0.0).unwrap();
        assert!((f0.re - 10.0).abs() < 1e-12 && f0.im.abs() < 1e-12);
        let b2 = BathSpec::new(0.3, 2.5, 4.0).unwrap();
        assert_relative_eq!(b2.kernel(0.0).re, 0.3 * gamma(3.5) * 16.0, max_relative = 1e-12);
    }

    #[test]
    fn total_weight_ohmic() {
        assert_relative_eq!(BathSpec::default().total_weight(), 10.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_energy_rejected() {
        assert!(BathSpec::default().self_energy(0.0).is_err());
        assert!(BathSpec::default().self_energy_slope(1.0).is_err());
    }
}
