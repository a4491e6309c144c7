//! Compressible barotropic MHD on the flat torus `[-L, L]^d` with
//! region-wise penalized transport coefficients.
//!
//! The crate is split along the lines of the computation:
//!
//! - [`geometry`]: periodic grid, concentric-ball region map, boundary samples
//! - [`coefficients`]: ε-schedules and mollified coefficient fields
//! - [`eos`]: pressure law, pressure potential, stresses, total energy
//! - [`operators`]: staggered grad/div/curl with `div ∘ curl = 0` by construction
//! - [`solver`]: IMEX integrator with constrained transport for `μH`
//! - [`diagnostics`]: energy budget, trace/region norms, weak-form residuals, sweeps
//! - [`config`]: run configuration file parsing and validation
//!
//! Manufactured-solution support used by the verification verbs lives in
//! [`manufactured`].

pub mod coefficients;
pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod field;
pub mod geometry;
pub mod linalg;
pub mod manufactured;
mod multigrid;
pub mod operators;
pub mod output;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
