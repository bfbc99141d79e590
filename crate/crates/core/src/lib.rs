//! Numerical lab for the singular gradient flow `u_t = (W_p(u_x))_x` on the
//! unit torus.
//!
//! Fields live on a staggered periodic grid: values `u_i` at cells, slopes
//! `p_i = (u_{i+1} - u_i)/dx` and fluxes `ξ_i` at interfaces. The discrete
//! gradient and divergence are exact negative adjoints, so every energy
//! identity the continuum problem enjoys has an exact discrete analogue.

// `!(x <= y)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod generators;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod nonlinearity;
pub mod orlicz;
pub mod parabolic;
pub mod scenario;
pub mod svg;

pub use elliptic::{EllipticProblem, EllipticSolution, SolveError, SolverOptions};
pub use grid::{DualField, Field, GridError, PeriodicGrid};
pub use nonlinearity::{NonlinearW, RegularizedW};
pub use orlicz::OrliczPhi;
