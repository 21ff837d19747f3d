//! Numerical laboratory for the quantitative Gross–Pitaevskii derivation.
//!
//! * [`scattering`]: zero-energy scattering profile and scattering length.
//! * [`gp_dynamics`]: pseudo-spectral GP and modified-GP evolution.
//! * [`correlation_kernels`]: the correlation kernel and its hyperbolic calculus.
//! * [`fock_lab`]: truncated bosonic Fock space at toy scale.
//! * [`convergence_bench`]: configuration, pipeline and rate fits.

pub mod error;
pub mod exec;
pub mod quadrature;
pub mod scattering;

pub use error::{GpkError, Result};
pub use exec::Execution;
pub mod gp_dynamics;
pub mod correlation_kernels;
pub mod linalg;
pub mod fock_lab;
pub mod convergence_bench;
