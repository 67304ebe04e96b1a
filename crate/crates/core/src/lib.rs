//! Numerical laboratory for the average number of common zeros of Laplace
//! eigenfunctions on homogeneous model spaces.
//!
//! The crate builds analytic eigenbases on S¹, S² and flat 2-tori, maps them
//! into the unit sphere, derives closed-form predictions from the pullback
//! metric, and checks those predictions by Monte Carlo over random subspaces
//! and by an independent spherical Crofton engine.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod config;
pub mod crofton;
pub mod embedding;
pub mod error;
pub mod identities;
pub mod models;
pub mod nodal;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod suite;
pub mod zeros;

pub use error::{Error, Result};
pub use models::{EigenBasis, ManifoldModel, ModelKind, Point};

/// Version string embedded in every report.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), "/", env!("CARGO_PKG_VERSION"));
