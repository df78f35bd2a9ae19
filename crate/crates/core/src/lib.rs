//! Simulation and analysis of a deterministic cavity-QED single-photon
//! source: pulse design, atom–cavity dynamics, fountain-delivered atoms,
//! detector click synthesis and the statistics computed from the clicks.

pub mod error;
pub mod rng;
pub mod series;
pub mod qsim;
pub mod pulse;
pub mod fountain;
pub mod photostream;
pub mod analysis;
pub mod scenario;

pub use error::{Error, Result};
