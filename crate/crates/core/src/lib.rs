//! Desk-scale laboratory for a parametric boundary optimal control problem:
//! a semilinear elliptic state equation with Robin boundary control on the
//! unit disk, a mixed state-control inequality constraint on the boundary,
//! and a nonconvex cost. The crate solves the control problem with an
//! augmented-Lagrangian / adjoint-gradient method and runs parametric
//! stability experiments on the solution set.
//!
//! Module map:
//! - [`geometry`]: structured triangulation of the unit disk, quadrature, norms.
//! - [`pde`]: P1 Galerkin assembly and linear/Newton Robin solvers.
//! - [`problem`]: problem instances, cost, constraint, assumption checks.
//! - [`feasible`]: admissible-set membership and constructive feasible points.
//! - [`adjoint`]: adjoint solves, reduced gradients, KKT diagnostics.
//! - [`optimize`]: augmented-Lagrangian solver and multistart solution sets.
//! - [`stability`]: parametric sweeps and the solution-set excess metric.
//! - [`oracle`]: independent radial-ODE and brute-force references.

pub mod adjoint;
pub mod error;
pub mod expr;
pub mod feasible;
pub mod geometry;
pub mod linalg;
pub mod optimize;
pub mod oracle;
pub mod pde;
pub mod problem;
pub mod stability;

pub use error::{Error, Result};
