//! Optimal local hidden-variable models for two-photon polarization
//! correlation experiments, the deviation bound they imply, event-level
//! simulation, and the data-side inequality tests.

pub mod error;
pub mod inequalities;
pub mod model;
pub mod montecarlo;
pub mod optimal;
pub mod periodic;
pub mod rng;
pub mod variational;

pub use error::{Error, Result};
