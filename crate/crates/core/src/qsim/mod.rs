//! Atom–cavity dynamics of the three-level Λ system.

mod evolve;
mod params;
mod repump;
mod table;
mod trajectory;

pub use evolve::{default_step, evolve_amplitudes, QuantumState, StateHistory, NORM_TOLERANCE};
pub use params::{derive_cavity_params, CavityLosses, DerivedCavity, LambdaSystemParams, SPEED_OF_LIGHT};
pub use repump::{repump, RepumpResult, Repumper};
pub use table::EmissionTable;
pub use trajectory::{run_trajectory, EmissionOutcome, JumpSampler, Outcome};
