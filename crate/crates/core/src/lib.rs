//! Nonlocal diffusion and bond-based peridynamics on the unit square.
//!
//! The crate discretizes volume-constrained nonlocal problems with piecewise
//! linear finite elements on a structured triangulation and solves the
//! resulting systems either with a single-domain Krylov method or with a
//! one-level FETI domain decomposition.
//!
//! Module map:
//! - [`mesh`]: structured triangulations, labels, error norms.
//! - [`kernels`]: kernel families, approximate interaction balls, interaction predicates.
//! - [`assembly`]: stiffness matrices and load vectors, global and per subdomain.
//! - [`subdivision`]: overlapping nonlocal subdivisions, counting function, constraints.
//! - [`sparse_linalg`]: sparse storage, Cholesky, CG, projected PCG, dense solves.
//! - [`feti`]: Schur operators, coarse space, preconditioner, FETI driver.
//! - [`harness`]: configuration, manufactured problems, studies, exports.

pub mod assembly;
pub mod error;
pub mod feti;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod mesh;
pub mod quadrature;
pub mod registry;
pub mod sparse_linalg;
pub mod subdivision;

pub use error::{Error, Result};
