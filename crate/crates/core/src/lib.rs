//! Thermodynamics of the full Dicke spin-boson model, with and without a
//! uniform infinite-range dipole-dipole coupling between the atoms.
//!
//! The crate has four layers:
//!
//! * [`model`]: parameter records, Matsubara frequencies and the truncated
//!   Fock ⊗ collective-spin basis.
//! * [`meanfield`]: thermodynamic-limit coefficient functions, critical
//!   temperatures, the collective-excitation spectrum and the comparison of
//!   partition-function denominators between the two models.
//! * [`exactdiag`]: finite-N Hamiltonians in the symmetric `j = N/2` sector,
//!   thermal observables, ground states and quantum-critical scans.
//! * [`entanglement`]: reduced density operators, von Neumann entropy,
//!   Schmidt analysis and fluctuation correlations for bipartite pure states.
//!
//! Units: ħ = k_B = 1 throughout.

pub mod entanglement;
pub mod error;
pub mod exactdiag;
pub mod meanfield;
pub mod model;
pub mod roots;

mod lanczos;
mod par;

pub use error::{Error, Result};
pub use model::{CouplingMode, ModelParams, Temperature};
