//! Bound states and non-Markovian dynamics of a modulated tight-binding chain
//! coupled to a common bosonic bath.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod oracle;
pub mod quad;
pub mod spectral;

pub use bath::BathSpec;
pub use error::{Error, Result};
pub use lattice::{Boundary, EigenSystem, LatticeSpec};
