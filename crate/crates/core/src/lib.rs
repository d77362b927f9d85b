//! Spreading speeds for two-species competition systems in media that are
//! periodic in both time and space.
//!
//! The crate computes principal eigenvalues of periodic parabolic operators,
//! semi-trivial periodic orbits, linear spreading speeds and the
//! certificates under which they coincide with the nonlinear speed, speed
//! brackets from a monotone profile recursion, and empirical front speeds
//! from direct simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coeffs;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod frontsim;
pub mod orbits;
pub mod pde;
pub mod speeds;
pub mod system;
pub mod weinberger;

pub use error::{Error, Result};
pub use exec::Exec;
pub use system::{ModelExprs, SystemSpec};
