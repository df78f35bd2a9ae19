//! Drive-pulse design for shaped single photons.

mod catalog;
mod filter;
mod shaper;

pub use catalog::{
    catalog_shape, parse_shape_table, tower_bridge_table, ShapeName, ShapeTarget, DEFAULT_TARGET_DT,
};
pub use filter::{band_limit, gaussian_response, gaussian_sigma};
pub use shaper::{invert_target, InversionOptions, InversionResult};

/// Bandwidth of the acousto-optic modulator shaping the drive, Hz.
pub const AOM_BANDWIDTH_HZ: f64 = 5e6;
