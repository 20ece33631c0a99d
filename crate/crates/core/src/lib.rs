#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical toolkit for the generalized three-species Lotka–Volterra system
//!
//! ```text
//! dX/dt = X - XY + C X^2 - A Z X^2
//! dY/dt = -Y + XY
//! dZ/dt = -B Z + A Z X^2          A, B, C >= 0
//! ```
//!
//! The crate covers the model itself (field, Jacobian, equilibria, spectra and
//! the slow manifold), time integration, local stability and chaos
//! indicators, and geometric diagnostics for the hole that opens in the
//! attractor around the slow manifold as `A` varies.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod integrator;
pub mod model;
pub mod topology;

pub use error::{Error, Result};
pub use model::{Params, State};
