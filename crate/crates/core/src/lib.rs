//! SUPG-stabilized finite elements for advection-dominated
//! advection-diffusion problems, optimal stabilization parameters, and a
//! small neural network that learns to predict them.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod fem;
pub mod metrics;
pub mod mlp;
pub mod problems;
pub mod stabilization;
pub mod tau_search;

pub use error::{Error, Result};

/// Crate version, recorded in every written artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
