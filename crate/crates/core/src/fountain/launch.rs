use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Mass of 87Rb, kg.
pub const RB87_MASS: f64 = 1.443_160_6e-25;
/// Rb D2 line, m.
pub const RB_D2_WAVELENGTH: f64 = 780.241e-9;
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Moving-molasses launch of the MOT cloud toward the cavity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaunchConfig {
    /// Relative detuning between upper and lower molasses beams, Hz.
    pub delta_f: f64,
    pub wavelength: f64,
    /// MOT centre to mode centre, m.
    pub launch_height: f64,
    /// 1/e^(1/2) radius of the cloud, m.
    pub cloud_radius_sigma: f64,
    pub temperature: f64,
    /// Mean number of atoms per shot that enter the mode region.
    pub atom_flux: f64,
    pub gravity: f64,
    pub atom_mass: f64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        let launch_height = 8e-3;
        Self {
            delta_f: launch_detuning_for_apex(launch_height, RB_D2_WAVELENGTH, STANDARD_GRAVITY),
            wavelength: RB_D2_WAVELENGTH,
            launch_height,
            cloud_radius_sigma: 0.5e-3,
            temperature: 10e-6,
            atom_flux: 0.1,
            gravity: STANDARD_GRAVITY,
            atom_mass: RB87_MASS,
        }
    }
}

impl LaunchConfig {
    /// `v = sqrt(2) lambda delta_f`.
    pub fn launch_velocity(&self) -> f64 {
        launch_velocity(self.wavelength, self.delta_f)
    }

    /// One-dimensional Maxwell–Boltzmann velocity spread `sqrt(k T / m)`.
    pub fn thermal_velocity_sigma(&self) -> f64 {
        (BOLTZMANN * self.temperature / self.atom_mass).sqrt()
    }

    /// Height of the turning point above the MOT for the nominal launch.
    pub fn apex_height(&self) -> f64 {
        let v = self.launch_velocity();
        v * v / (2.0 * self.gravity)
    }

    /// Time of the nominal turning point after launch.
    pub fn apex_time(&self) -> f64 {
        self.launch_velocity() / self.gravity
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [
            ("delta_f", self.delta_f),
            ("wavelength", self.wavelength),
            ("launch_height", self.launch_height),
            ("gravity", self.gravity),
            ("atom_mass", self.atom_mass),
        ] {
            if !(value > 0.0) {
                v.push(format!("launch.{name} must be > 0 (got {value})"));
            }
        }
        for (name, value) in [
            ("cloud_radius_sigma", self.cloud_radius_sigma),
            ("temperature", self.temperature),
            ("atom_flux", self.atom_flux),
        ] {
            if !(value >= 0.0) {
                v.push(format!("launch.{name} must be >= 0 (got {value})"));
            }
        }
        if !(self.wavelength > 100e-9 && self.wavelength < 10e-6) {
            v.push(format!("launch.wavelength {} m is not an optical wavelength", self.wavelength));
        }
        v
    }
}

/// `v = sqrt(2) lambda delta_f`.
pub fn launch_velocity(wavelength: f64, delta_f: f64) -> f64 {
    SQRT_2 * wavelength * delta_f
}

/// Molasses detuning whose launch puts the turning point `height` above the MOT.
pub fn launch_detuning_for_apex(height: f64, wavelength: f64, gravity: f64) -> f64 {
    (2.0 * gravity * height).sqrt() / (SQRT_2 * wavelength)
}

/// `2 sqrt(2 d / g)`: time spent within `d` below the turning point, up and down.
pub fn max_interaction_time(span: f64, gravity: f64) -> f64 {
    if span <= 0.0 {
        return 0.0;
    }
    2.0 * (2.0 * span / gravity).sqrt()
}

/// Cavity mode seen by the atoms. The mode axis is horizontal (x) and the
/// mirrors bound it to `|x| <= cavity_length / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeGeometry {
    pub waist_w0: f64,
    pub wavelength: f64,
    pub standing_wave: bool,
    pub cavity_length: f64,
}

impl Default for ModeGeometry {
    fn default() -> Self {
        Self {
            waist_w0: 20e-6,
            wavelength: RB_D2_WAVELENGTH,
            standing_wave: true,
            cavity_length: 74e-6,
        }
    }
}

impl ModeGeometry {
    pub fn diameter(&self) -> f64 {
        2.0 * self.waist_w0
    }

    /// Transverse envelope `exp(-(y^2 + z^2) / w0^2)`, zero outside the mirrors.
    pub fn envelope(&self, x: f64, y: f64, z: f64) -> f64 {
        if x.abs() > 0.5 * self.cavity_length {
            return 0.0;
        }
        (-(y * y + z * z) / (self.waist_w0 * self.waist_w0)).exp()
    }

    /// Relative coupling `g / g0` at a point.
    pub fn relative_coupling(&self, x: f64, y: f64, z: f64) -> f64 {
        let e = self.envelope(x, y, z);
        if self.standing_wave {
            e * (2.0 * std::f64::consts::PI * x / self.wavelength).cos()
        } else {
            e
        }
    }

    /// Transverse radius at which the envelope drops to `fraction`.
    pub fn radius_at(&self, fraction: f64) -> f64 {
        self.waist_w0 * (1.0 / fraction).ln().sqrt()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [
            ("waist_w0", self.waist_w0),
            ("wavelength", self.wavelength),
            ("cavity_length", self.cavity_length),
        ] {
            if !(value > 0.0) {
                v.push(format!("mode.{name} must be > 0 (got {value})"));
            }
        }
        v
    }
}
