//! Simulation and verification of the massive Thirring system
//!
//! ```text
//! (d_t + d_x) u = i v + i lambda |v|^2 u
//! (d_t - d_x) v = i u + i lambda |u|^2 v
//! ```
//!
//! on the line. A light-cone lattice split-step solver carries the data from
//! `t = 1` to a first hyperboloid; a method-of-lines solver in hyperbolic
//! coordinates `t = rho cosh y`, `x = rho sinh y` then follows the interior
//! to large `rho`, where the asymptotic profiles and their logarithmic phase
//! are extracted.

// Negated float comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartesian;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod hyperbolic;
pub mod model;
pub mod mol;
pub mod scattering;
pub mod stencil;

pub use error::{Error, Result};
pub use exec::Execution;
