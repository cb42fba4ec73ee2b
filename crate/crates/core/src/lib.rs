//! Conservative finite-difference schemes from conservation law multipliers.
//!
//! A scheme is `F^{tau,h} = Lambda^{-1} (D_t psi + D_x . Phi)` built from
//! discrete densities, fluxes and multipliers, so that every solution
//! satisfies a discrete divergence identity and conserves its densities.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod grid;
pub mod linalg;
pub mod local;
pub mod problems;
pub mod scheme;
pub mod solver;
pub mod verify;

pub use error::{GridError, ProblemError, SchemeError, SolverError, VerifyError};
pub use grid::{BoundaryMode, FieldState, SpatialGrid, TimeGrid};
pub use problems::{catalog, instantiate, MultiplierProblem};
pub use solver::{integrate, SolverConfig};
