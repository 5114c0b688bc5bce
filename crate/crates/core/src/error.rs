use thiserror::Error;

/// Errors raised by the numerical routines and the scenario runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge (estimated error {estimate:.3e})")]
    Quadrature { estimate: f64 },

    #[error("symmetric eigensolver did not converge")]
    Eigensolver,

    #[error("energy {energy} lies within {distance:.3e} of coupled lattice level {index}")]
    PoleProximity { energy: f64, index: usize, distance: f64 },

    #[error("degenerate root at E = {energy}: |F'(E)| = {slope:.3e}")]
    DegenerateRoot { energy: f64, slope: f64 },

    #[error("bound-state weight estimators disagree: residue {residue}, projection {projection}")]
    EstimatorMismatch { residue: f64, projection: f64 },

    #[error("norm grew to {norm} at t = {time}; reduce dt")]
    Instability { norm: f64, time: f64 },

    #[error("series is not oscillatory in the window ({extrema} qualifying extrema)")]
    NonOscillatory { extrema: usize },

    #[error("dense problem of dimension {dim} exceeds the cap {cap}")]
    SizeCap { dim: usize, cap: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature { .. }
                | Error::Eigensolver
                | Error::DegenerateRoot { .. }
                | Error::EstimatorMismatch { .. }
                | Error::Instability { .. }
                | Error::NonOscillatory { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
