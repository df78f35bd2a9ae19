use serde::{Deserialize, Serialize};

/// FWHM timing resolution of the detectors.
pub const DETECTOR_RESOLUTION_FWHM: f64 = 350e-12;

/// Losses and noise between the cavity and the time tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EfficiencyChain {
    pub eta_outcoupling: f64,
    pub eta_collection: f64,
    pub eta_detector: f64,
    /// Per detector.
    pub dark_rate_hz: f64,
    pub detector_jitter_sigma: f64,
    /// Background from the repump beam, present only inside repump windows.
    pub repump_scatter_rate_hz: f64,
}

impl Default for EfficiencyChain {
    fn default() -> Self {
        Self {
            eta_outcoupling: 0.50,
            eta_collection: 0.65,
            eta_detector: 0.70,
            dark_rate_hz: 1000.0,
            detector_jitter_sigma: DETECTOR_RESOLUTION_FWHM / (8.0 * 2f64.ln()).sqrt(),
            repump_scatter_rate_hz: 0.0,
        }
    }
}

impl EfficiencyChain {
    /// A lossless, noiseless chain.
    pub fn ideal() -> Self {
        Self {
            eta_outcoupling: 1.0,
            eta_collection: 1.0,
            eta_detector: 1.0,
            dark_rate_hz: 0.0,
            detector_jitter_sigma: 0.0,
            repump_scatter_rate_hz: 0.0,
        }
    }

    /// Survival probability from the cavity mode to the beam splitter.
    pub fn transport(&self) -> f64 {
        self.eta_outcoupling * self.eta_collection
    }

    pub fn product(&self) -> f64 {
        self.transport() * self.eta_detector
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("eta_outcoupling", self.eta_outcoupling),
            ("eta_collection", self.eta_collection),
            ("eta_detector", self.eta_detector),
        ] {
            if !(0.0..=1.0).contains(&x) {
                v.push(format!("chain.{name} must be in [0, 1] (got {x})"));
            }
        }
        for (name, x) in [
            ("dark_rate_hz", self.dark_rate_hz),
            ("detector_jitter_sigma", self.detector_jitter_sigma),
            ("repump_scatter_rate_hz", self.repump_scatter_rate_hz),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                v.push(format!("chain.{name} must be finite and >= 0 (got {x})"));
            }
        }
        v
    }
}
