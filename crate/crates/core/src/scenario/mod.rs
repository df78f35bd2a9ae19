//! Complete experiments: configuration, simulation and analysis.

mod analyze;
mod config;
mod run;

pub use analyze::{analyze, background_rates, g2_histogram, target_bins, AnalysisBundle, G2Analysis, HomAnalysis, ShapeAnalysis};
pub use config::{AnalysisConfig, AtomConfig, AtomSourceKind, PulseConfig, RunConfig, ScenarioConfig};
pub use run::{
    design_pulse, set_threads, simulate, simulate_range, simulate_with, truth_peak_areas, DesignedPulse, GroundTruth, PulseExposure, ShotTally,
    SimulationOutput,
};
