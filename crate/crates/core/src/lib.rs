//! Exponential stability certificates for linear delay differential systems
//! with matrix coefficients, built from matrix measures and M-matrix tests,
//! together with a method-of-steps simulator used to cross-check them.
//!
//! * [`linalg`]: matrices over `f64` or exact rationals, norms, measures, `exp`.
//! * [`mmatrix`]: non-singular M-matrix detection.
//! * [`criteria`]: the stability tests and the delay-threshold sweep.
//! * [`sim`]: fixed-step integration, decay estimation, forcing checks.
//! * [`specfile`] and [`commands`]: the JSON spec format and CLI commands.

pub mod commands;
pub mod criteria;
pub mod error;
pub mod linalg;
pub mod mmatrix;
pub mod sim;
pub mod specfile;

pub use error::{Error, Result};
