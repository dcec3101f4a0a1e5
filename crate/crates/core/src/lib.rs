//! Periodic homogenization toolkit.
//!
//! Computes effective coefficients of periodic elliptic media from unit-cell
//! problems, solves fine-scale and homogenized Dirichlet problems side by
//! side, assembles first-order correctors and measures the scaled error
//! metrics as the domain grows relative to the period.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: periodic cell and Dirichlet macro grids, quadrature, gradients.
//! * [`fields`]: coefficient fields `K(y)` and two-scale sources.
//! * [`linalg`]: conjugate gradients and the Thomas algorithm.
//! * [`cell`]: correctors, effective tensor and sources, mass balance.
//! * [`macroscale`]: fine and homogenized solves.
//! * [`corrector`]: `p₁` and the error metrics.
//! * [`pipeline`]: one full comparison for a given configuration.
//! * [`bench`]: sweeps, rate fits, closed-form 1D oracle.
//! * [`report`]: JSON/CSV output.

// `!(x > 0.0)` is kept on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cell;
pub mod corrector;
pub mod error;
pub mod fields;
pub mod grid;
pub mod linalg;
pub mod macroscale;
pub mod pipeline;
pub mod report;

pub use error::{Error, Result};
