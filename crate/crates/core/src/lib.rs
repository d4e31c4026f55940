//! Bayesian structure learning for Gaussian graphical models.

pub mod chordal;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod graph;
pub mod inference;
mod linalg;
pub mod metrics;
pub mod priors;
pub mod samplers;
pub mod simbench;

pub use error::{Error, Result};
