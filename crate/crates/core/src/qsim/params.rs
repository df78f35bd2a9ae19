use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const TWO_PI: f64 = 2.0 * PI;

/// Atom–cavity constants of the three-level Λ system.
///
/// All rates are angular frequencies in rad/s. `kappa` and `gamma` are field
/// (amplitude) decay rates, so the photon escape rate is `2 kappa` and the
/// excited-state population decays at `2 gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaSystemParams {
    pub g0: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub delta_c: f64,
    pub delta_l: f64,
    pub cavity_length: f64,
    pub finesse: f64,
    pub mirror_t1: f64,
    pub mirror_t2: f64,
    pub mirror_loss_per_mirror: f64,
}

impl Default for LambdaSystemParams {
    fn default() -> Self {
        Self {
            g0: TWO_PI * 12e6,
            kappa: TWO_PI * 12e6,
            gamma: TWO_PI * 3e6,
            delta_c: 0.0,
            delta_l: 0.0,
            cavity_length: 74e-6,
            finesse: 85_000.0,
            mirror_t1: 40e-6,
            mirror_t2: 1e-6,
            mirror_loss_per_mirror: 18e-6,
        }
    }
}

impl LambdaSystemParams {
    pub fn validate(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(violations))
        }
    }

    /// Every violated invariant, for config diagnostics.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [("g0", self.g0), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if !(value > 0.0) {
                v.push(format!("system.{name} must be > 0 (got {value})"));
            }
        }
        if !(self.finesse > 0.0) {
            v.push(format!("system.finesse must be > 0 (got {})", self.finesse));
        }
        if !(self.cavity_length > 0.0) {
            v.push(format!("system.cavity_length must be > 0 (got {})", self.cavity_length));
        }
        for (name, value) in [
            ("mirror_t1", self.mirror_t1),
            ("mirror_t2", self.mirror_t2),
            ("mirror_loss_per_mirror", self.mirror_loss_per_mirror),
        ] {
            if !(value >= 0.0) {
                v.push(format!("system.{name} must be >= 0 (got {value})"));
            }
        }
        if !(self.mirror_t2 < self.mirror_t1) {
            v.push(format!(
                "system.mirror_t2 ({}) must be below mirror_t1 ({})",
                self.mirror_t2, self.mirror_t1
            ));
        }
        v
    }

    /// `g0 >= kappa` and `g0 >= gamma`. Non-strict so that the equal-rate
    /// case `g0 = kappa` counts as strong coupling.
    pub fn is_strongly_coupled(&self) -> bool {
        self.g0 >= self.kappa && self.g0 >= self.gamma
    }

    pub fn is_resonant(&self) -> bool {
        self.delta_c == 0.0 && self.delta_l == 0.0
    }

    /// Single-atom cooperativity `g0^2 / (2 kappa gamma)`.
    pub fn cooperativity(&self) -> f64 {
        self.g0 * self.g0 / (2.0 * self.kappa * self.gamma)
    }

    pub fn with_coupling(&self, g0: f64) -> Self {
        Self { g0, ..self.clone() }
    }
}

/// How the cavity losses are specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CavityLosses {
    Finesse(f64),
    Mirrors {
        t1: f64,
        t2: f64,
        loss_per_mirror: f64,
    },
}

/// Quantities that follow from the cavity length and its losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCavity {
    /// Field decay rate (angular half-width), rad/s.
    pub kappa: f64,
    pub free_spectral_range_hz: f64,
    pub linewidth_fwhm_hz: f64,
    pub finesse: f64,
    /// Fraction of intracavity photons leaving through the output mirror.
    /// Unknown when only the finesse is given.
    pub outcoupling: Option<f64>,
}

/// FSR = c/2L, FWHM = FSR/F, kappa = pi FWHM. With a mirror set,
/// F = 2 pi / (T1 + T2 + 2 loss) and eta_out = T1 / (T1 + T2 + 2 loss).
pub fn derive_cavity_params(cavity_length: f64, losses: CavityLosses) -> Result<DerivedCavity> {
    if !(cavity_length > 0.0) {
        return Err(Error::param("cavity_length", format!("must be > 0, got {cavity_length}")));
    }
    let (finesse, outcoupling) = match losses {
        CavityLosses::Finesse(f) => {
            if !(f > 0.0) {
                return Err(Error::param("finesse", format!("must be > 0, got {f}")));
            }
            (f, None)
        }
        CavityLosses::Mirrors {
            t1,
            t2,
            loss_per_mirror,
        } => {
            if !(t1 > 0.0) || !(t2 >= 0.0) || !(loss_per_mirror >= 0.0) {
                return Err(Error::param(
                    "mirrors",
                    format!("need T1 > 0 and T2, loss >= 0 (got {t1}, {t2}, {loss_per_mirror})"),
                ));
            }
            let round_trip = t1 + t2 + 2.0 * loss_per_mirror;
            (TWO_PI / round_trip, Some(t1 / round_trip))
        }
    };
    let fsr = SPEED_OF_LIGHT / (2.0 * cavity_length);
    let fwhm = fsr / finesse;
    Ok(DerivedCavity {
        kappa: PI * fwhm,
        free_spectral_range_hz: fsr,
        linewidth_fwhm_hz: fwhm,
        finesse,
        outcoupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_cavity_gives_twelve_megahertz() {
        let d = derive_cavity_params(74e-6, CavityLosses::Finesse(85_000.0)).unwrap();
        let kappa_mhz = d.kappa / TWO_PI / 1e6;
        assert!((kappa_mhz - 11.9).abs() < 0.05, "kappa/2pi = {kappa_mhz} MHz");
        assert!(d.outcoupling.is_none());
    }

    #[test]
    fn outcoupling_from_mirrors() {
        let d = derive_cavity_params(
            74e-6,
            CavityLosses::Mirrors {
                t1: 40e-6,
                t2: 1e-6,
                loss_per_mirror: 18e-6,
            },
        )
        .unwrap();
        assert!((d.outcoupling.unwrap() - 40.0 / 77.0).abs() < 1e-12);

        let lossless = derive_cavity_params(
            74e-6,
            CavityLosses::Mirrors {
                t1: 40e-6,
                t2: 0.0,
                loss_per_mirror: 0.0,
            },
        )
        .unwrap();
        assert_eq!(lossless.outcoupling, Some(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(derive_cavity_params(0.0, CavityLosses::Finesse(1e5)).is_err());
        assert!(derive_cavity_params(1e-4, CavityLosses::Finesse(-1.0)).is_err());
        assert!(derive_cavity_params(
            1e-4,
            CavityLosses::Mirrors {
                t1: 0.0,
                t2: 0.0,
                loss_per_mirror: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn default_is_strongly_coupled() {
        let p = LambdaSystemParams::default();
        assert!(p.validate().is_ok());
        assert!(p.is_strongly_coupled());
        assert!((p.cooperativity() - 2.0).abs() < 1e-12);
        let weak = p.with_coupling(TWO_PI * 10e6);
        assert!(!weak.is_strongly_coupled());
    }

    #[test]
    fn validation_lists_all_violations() {
        let p = LambdaSystemParams {
            g0: 0.0,
            kappa: -1.0,
            mirror_t2: 50e-6,
            ..Default::default()
        };
        assert_eq!(p.violations().len(), 3);
    }
}
