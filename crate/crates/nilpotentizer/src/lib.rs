//! Nilpotent approximation of polynomial sub-Riemannian structures.

pub mod cli;
pub mod cone;
pub mod error;
pub mod gh;
pub mod grassmann;
pub mod liealg;
pub mod metrics;
pub mod scalar;
pub mod selftest;
pub mod vfields;

pub use error::{Error, Result};
