//! Statistics recovered from click streams.

mod correlate;
mod emission;
pub mod fit;
mod hom;
mod select;
mod shape;
mod summary;

pub use correlate::{
    central_peak_ratio, cross_correlate, fit_peak_envelope, peak_areas, CentralPeakRatio, CorrelationHistogram,
    EnvelopeFit, PeakAreas, PeriodicMask,
};
pub use emission::{fit_emission_probability, ConditionalProbability, EmissionFit, MIN_CONDITIONING_EVENTS};
pub use hom::{calibrate_sigma_delta, dephasing_visibility, hom_visibility, HomVisibility};
pub use select::{select_transits, SelectedBin, SelectionResult, TransitSelection};
pub use shape::{recover_shape, shape_chi2, sin4_bins, ChiSquareTest, ShapeHistogram};
pub use summary::{write_summary, SummaryRecord};
