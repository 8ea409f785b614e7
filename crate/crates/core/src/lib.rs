//! Boundary data completion for the two-dimensional (modified) Helmholtz
//! equation `-Δu + μu = 0`.
//!
//! Given both the trace `f` and the normal flux `g` of `u` on an accessible
//! boundary part `Γc`, the crate recovers the missing Dirichlet (or Neumann)
//! data on the inaccessible part `Γi`. The unknown boundary function is
//! parameterized by a low-degree polynomial on `Γi`, a Tikhonov-regularized
//! misfit functional is evaluated through a P1 finite element solver, and the
//! coefficients are searched with particle swarm optimization.
//!
//! Module map:
//!
//! * [`mesh`]: unit square / unit disc triangulations with tagged boundaries.
//! * [`fem`]: P1 assembly, reusable LDLᵀ factorization, traces, flux recovery.
//! * [`cases`]: the two benchmark solutions and the multiplicative noise model.
//! * [`param`]: polynomial coefficient vector ↔ nodal boundary function.
//! * [`objective`]: misfit functionals, naive and response-basis evaluation.
//! * [`pso`]: seeded, reproducible particle swarm optimizer.
//! * [`oracle`]: exact minimizer of the quadratic objective.

pub mod cases;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod objective;
pub mod oracle;
pub mod param;
pub mod pso;
mod skyline;

pub use error::{Error, Result};
