use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::TransitSelection;
use crate::error::{Error, Result};
use crate::fountain::{LaunchConfig, ModeGeometry};
use crate::photostream::{EfficiencyChain, InterferometerConfig, PulseSchedule};
use crate::pulse::{parse_shape_table, ShapeName, AOM_BANDWIDTH_HZ};
use crate::qsim::LambdaSystemParams;

/// Requested photon shape and the drive design settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    /// `sin2`, `tower_bridge` or `custom`.
    pub shape: String,
    /// Two-column `(t, amplitude)` table for `custom`.
    pub shape_table: Option<PathBuf>,
    pub duration: f64,
    pub p_target: f64,
    /// Cutoff of the AOM filter applied to the designed drive; none for an
    /// ideal modulator.
    pub band_limit_hz: Option<f64>,
    pub target_dt: f64,
    /// Coupling nodes of the emission table.
    pub table_nodes: usize,
    pub repump_success: f64,
    /// Refractive index used to map detection time to position along a fibre.
    pub fiber_index: f64,
}

impl Default for PulseConfig {
    fn default() -> Self {
        Self {
            shape: "sin2".into(),
            shape_table: None,
            duration: 350e-9,
            p_target: 0.66,
            band_limit_hz: None,
            target_dt: crate::pulse::DEFAULT_TARGET_DT,
            table_nodes: 41,
            repump_success: 1.0,
            fiber_index: 2.0,
        }
    }
}

impl PulseConfig {
    pub fn shape_name(&self) -> Result<ShapeName> {
        if self.shape == "custom" {
            let path = self
                .shape_table
                .as_ref()
                .ok_or_else(|| Error::Config(vec!["pulse.shape = \"custom\" needs pulse.shape_table".into()]))?;
            let text = std::fs::read_to_string(path)?;
            return Ok(ShapeName::Custom(parse_shape_table(&text)?));
        }
        self.shape.parse()
    }

    pub fn aom(&self) -> Option<f64> {
        self.band_limit_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomSourceKind {
    Fountain,
    /// One atom held at constant coupling for every pulse.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomConfig {
    pub source: AtomSourceKind,
    /// `g / g0` of a stationary atom.
    pub coupling: f64,
    /// Time after launch at which pulse 0 of each shot starts; by default
    /// the shot is centred on the nominal turning point.
    pub observation_start: Option<f64>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self { source: AtomSourceKind::Fountain, coupling: 1.0, observation_start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_shots: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n_shots: 1000, seed: 1, output_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Correlation bin for g2 and HOM histograms.
    pub correlation_bin: f64,
    /// Range of the g2 histogram, `|tau| <= max_tau`.
    pub max_tau: f64,
    /// Range of the HOM histograms.
    pub hom_max_tau: f64,
    pub selection: TransitSelection,
    pub thresholds: Vec<u32>,
    pub shape_bins: usize,
    pub k_max: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            correlation_bin: 10e-9,
            max_tau: 800e-6,
            hom_max_tau: 3.5e-6,
            selection: TransitSelection::default(),
            thresholds: vec![3, 5, 7],
            shape_bins: 35,
            k_max: 10,
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: LambdaSystemParams,
    pub launch: LaunchConfig,
    pub mode: ModeGeometry,
    pub atoms: AtomConfig,
    pub chain: EfficiencyChain,
    pub interferometer: InterferometerConfig,
    pub schedule: PulseSchedule,
    pub pulse: PulseConfig,
    pub run: RunConfig,
    pub analysis: AnalysisConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        // Relative shape tables resolve against the config file.
        if let (Some(table), Some(dir)) = (config.pulse.shape_table.as_mut(), path.parent()) {
            if table.is_relative() {
                *table = dir.join(&*table);
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization,
    /// ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.run.output_dir = PathBuf::new();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    /// Every violated invariant, across all sections.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.system.violations();
        v.extend(self.launch.violations());
        v.extend(self.mode.violations());
        v.extend(self.chain.violations());
        v.extend(self.schedule.violations());
        v.extend(self.interferometer.violations(&self.schedule));
        let p = &self.pulse;
        match p.shape.as_str() {
            "sin2" | "tower_bridge" => {}
            "custom" if p.shape_table.is_some() => {}
            "custom" => v.push("pulse.shape = \"custom\" needs pulse.shape_table".into()),
            other => v.push(format!("pulse.shape `{other}` is not one of sin2, tower_bridge, custom")),
        }
        if !(p.p_target > 0.0 && p.p_target <= 1.0) {
            v.push(format!("pulse.p_target must be in (0, 1] (got {})", p.p_target));
        }
        if !(p.duration > 0.0) {
            v.push(format!("pulse.duration must be > 0 (got {})", p.duration));
        } else if p.duration > self.schedule.drive_duration * (1.0 + 1e-9) {
            v.push(format!(
                "pulse.duration {:e} s exceeds the {:e} s drive window",
                p.duration, self.schedule.drive_duration
            ));
        }
        if !(p.target_dt > 0.0) {
            v.push(format!("pulse.target_dt must be > 0 (got {})", p.target_dt));
        }
        if let Some(f) = p.band_limit_hz {
            if !(f > 0.0) {
                v.push(format!("pulse.band_limit_hz must be > 0 (got {f})"));
            } else if f > 100.0 * AOM_BANDWIDTH_HZ {
                v.push(format!("pulse.band_limit_hz = {f} Hz is implausibly high for an AOM"));
            }
        }
        if p.table_nodes < 2 {
            v.push("pulse.table_nodes must be >= 2".into());
        }
        if !(0.0..=1.0).contains(&p.repump_success) {
            v.push(format!("pulse.repump_success must be in [0, 1] (got {})", p.repump_success));
        }
        if !(p.fiber_index > 0.0) {
            v.push(format!("pulse.fiber_index must be > 0 (got {})", p.fiber_index));
        }
        if !(0.0..=1.0).contains(&self.atoms.coupling) {
            v.push(format!("atoms.coupling must be in [0, 1] (got {})", self.atoms.coupling));
        }
        if let Some(t) = self.atoms.observation_start {
            if !(t >= 0.0) {
                v.push(format!("atoms.observation_start must be >= 0 (got {t})"));
            }
        }
        if self.run.n_shots == 0 {
            v.push("run.n_shots must be >= 1".into());
        }
        if self.run.n_shots > u32::MAX as u64 {
            v.push("run.n_shots exceeds the 32-bit shot index".into());
        }
        let a = &self.analysis;
        if !(a.correlation_bin > 0.0) {
            v.push(format!("analysis.correlation_bin must be > 0 (got {})", a.correlation_bin));
        }
        if !(a.max_tau > a.correlation_bin) || !(a.hom_max_tau > a.correlation_bin) {
            v.push("analysis.max_tau and hom_max_tau must exceed the correlation bin".into());
        }
        if a.selection.threshold_counts < 1 {
            v.push("analysis.selection.threshold_counts must be >= 1".into());
        }
        if a.selection.bin_width < 2.0 * self.schedule.period {
            v.push("analysis.selection.bin_width must span several pulse periods".into());
        }
        if a.thresholds.iter().any(|&t| t < 1) {
            v.push("analysis.thresholds must all be >= 1".into());
        }
        if a.shape_bins < 2 {
            v.push("analysis.shape_bins must be >= 2".into());
        }
        if a.k_max < 5 {
            v.push(format!("analysis.k_max must be >= 5 (got {})", a.k_max));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Time after launch at which pulse 0 starts.
    pub fn observation_start(&self) -> f64 {
        self.atoms
            .observation_start
            .unwrap_or_else(|| (self.launch.apex_time() - 0.5 * self.schedule.shot_duration()).max(0.0))
    }
}
