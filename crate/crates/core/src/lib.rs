//! Numerical verification of multiscale Poincaré inequalities on the unit box,
//! Neumann symmetrization identities for scattering kernels, and per-mode
//! Bogoliubov lower bounds.
//!
//! The crate is organised bottom-up: [`grid`] and [`form`] are the measurement
//! substrate, [`eigen`] certifies operator inequalities through smallest
//! eigenvalues, and the remaining modules each own one family of checks.
//! [`runner`] ties them into a configurable, reproducible report.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bogoliubov;
pub mod budget;
pub mod config;
pub mod eigen;
pub mod error;
pub mod form;
pub mod graph;
pub mod grid;
pub mod par;
pub mod poincare;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod scattering;
pub mod spectral;
pub mod stats;
pub mod symmetrization;

pub use error::{Error, Result};
