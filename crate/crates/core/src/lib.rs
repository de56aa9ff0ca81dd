//! Models of two intersecting pedestrian flows with side-stepping.
//!
//! Red individuals walk towards `+x`, blue individuals towards `+y`, and both
//! may step aside. The crate provides the stochastic exclusion process on a
//! lattice, the deterministic compartment dynamics, finite-volume solvers for
//! the first-order and regularized continuum systems in one and two
//! dimensions, linear stability tools and the diagnostics used to quantify
//! patterns and entropy behavior.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compartment;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod field;
pub mod lattice;
pub mod params;
pub mod pde1d;
pub mod pde2d;
pub mod stability;

pub use error::{Error, Result};
pub use params::{BoundaryDescriptor, Dims, Grid, ModelParams};
