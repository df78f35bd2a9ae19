//! Ballistic atom delivery from a moving-molasses fountain.

mod launch;
mod sample;
mod transit;

pub use launch::{
    launch_detuning_for_apex, launch_velocity, max_interaction_time, LaunchConfig, ModeGeometry, BOLTZMANN,
    RB87_MASS, RB_D2_WAVELENGTH, STANDARD_GRAVITY,
};
pub use sample::{
    calibrate_atom_flux, median_duration, sample_transits, two_atom_fraction, TransitSampler, CLIP_FRACTION,
};
pub use transit::{write_transit_table, AtomTransit, Ballistic, TransitSample};
