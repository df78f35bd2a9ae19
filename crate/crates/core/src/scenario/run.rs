use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AtomSourceKind, ScenarioConfig};
use crate::analysis::PeakAreas;
use crate::error::{Error, Result};
use crate::fountain::{AtomTransit, TransitSampler};
use crate::photostream::{synthesize_clicks, ClickStream, HomStats, PhotonEvent};
use crate::pulse::{band_limit, catalog_shape, invert_target, InversionOptions, ShapeTarget};
use crate::qsim::{evolve_amplitudes, EmissionTable, Outcome, Repumper};
use crate::rng::{stream_rng, streams};
use crate::series::{PulseEnvelope, TimeSeries};

/// The drive for a scenario and what it does to a maximally coupled atom.
#[derive(Debug, Clone)]
pub struct DesignedPulse {
    pub target: ShapeTarget,
    /// Drive over the whole drive window, after the optional band limit.
    pub drive: PulseEnvelope,
    /// Inverted drive before filtering.
    pub ideal_drive: PulseEnvelope,
    /// Photon intensity `|phi(t)|^2` from forward simulation at `g0`.
    pub intensity: TimeSeries,
    pub p_emit: f64,
    pub p_spont: f64,
    pub c_e_floor: f64,
}

impl DesignedPulse {
    /// Per-coupling emission table over `[0, g0]`.
    pub fn table(&self, config: &ScenarioConfig) -> Result<EmissionTable> {
        EmissionTable::build(&config.system, &self.drive, config.system.g0, config.pulse.table_nodes)
    }
}

/// Inverts the requested shape, pads the drive to the drive window and
/// checks it by forward integration.
pub fn design_pulse(config: &ScenarioConfig) -> Result<DesignedPulse> {
    config.validate()?;
    let p = &config.pulse;
    let target = catalog_shape(&p.shape_name()?, p.duration, p.p_target, p.target_dt)?;
    let inversion = invert_target(&config.system, &target, InversionOptions::default())?;
    let c_e_floor = inversion.c_e_floor;
    let ideal = inversion.into_drive()?;

    let s = &ideal.series;
    let n_window = ((config.schedule.drive_duration / s.dt()).round() as usize + 1).max(s.len());
    let mut values = s.values().to_vec();
    values.resize(n_window, 0.0);
    let padded = PulseEnvelope::rabi_drive(TimeSeries::new(s.t0(), s.dt(), values)?);
    let drive = match p.band_limit_hz {
        Some(f) => band_limit(&padded, f),
        None => padded,
    };

    let g = TimeSeries::constant(s.t0(), s.dt(), drive.len(), config.system.g0)?;
    let history = evolve_amplitudes(&config.system, &drive, &g, None)?;
    let k2 = 2.0 * config.system.kappa;
    let intensity: Vec<f64> = history.states.iter().map(|st| k2 * st.c_g.norm_sqr()).collect();
    let last = history.states.last().expect("non-empty history");
    Ok(DesignedPulse {
        target,
        drive,
        ideal_drive: padded_ideal(&ideal, n_window)?,
        intensity: TimeSeries::new(s.t0(), s.dt(), intensity)?,
        p_emit: last.emitted_norm,
        p_spont: last.spont_norm,
        c_e_floor,
    })
}

fn padded_ideal(ideal: &PulseEnvelope, n: usize) -> Result<PulseEnvelope> {
    let s = &ideal.series;
    let mut v = s.values().to_vec();
    v.resize(n, 0.0);
    Ok(PulseEnvelope::rabi_drive(TimeSeries::new(s.t0(), s.dt(), v)?))
}

/// Expected cavity-photon probabilities of one atom on consecutive pulses,
/// ignoring repump failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseExposure {
    pub shot: u32,
    pub atom: u32,
    pub first_pulse: u32,
    pub p_cavity: Vec<f32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShotTally {
    pub driven_pulses: u64,
    pub photons: u64,
    pub spontaneous: u64,
    pub repump_failures: u64,
}

/// What the simulation did, for closed-loop checks.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub transits: Vec<AtomTransit>,
    pub exposures: Vec<PulseExposure>,
    pub photons: Vec<PhotonEvent>,
    pub tally: ShotTally,
    pub hom: HomStats,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub clicks: ClickStream,
    pub truth: GroundTruth,
    pub pulse: DesignedPulse,
    pub config_hash: String,
}

struct ShotResult {
    clicks: ClickStream,
    transits: Vec<AtomTransit>,
    exposures: Vec<PulseExposure>,
    photons: Vec<PhotonEvent>,
    tally: ShotTally,
    hom: HomStats,
}

/// Coupling seen by one emitter on each pulse it is exposed to.
struct Emitter {
    atom: u32,
    first_pulse: u32,
    couplings: Vec<f64>,
}

fn fountain_emitters(transits: &[AtomTransit], config: &ScenarioConfig) -> Vec<Emitter> {
    let sched = &config.schedule;
    let t_obs = config.observation_start();
    let mid = sched.drive_start + 0.5 * sched.drive_duration;
    let n = sched.pulses_per_shot as i64;
    transits
        .iter()
        .filter_map(|tr| {
            // pulse k sees the atom at t_obs + k period + mid
            let k0 = ((tr.t_enter - t_obs - mid) / sched.period).ceil() as i64;
            let k1 = ((tr.t_exit - t_obs - mid) / sched.period).floor() as i64;
            let (k0, k1) = (k0.max(0), k1.min(n - 1));
            if k0 > k1 {
                return None;
            }
            let couplings = (k0..=k1).map(|k| tr.coupling(t_obs + k as f64 * sched.period + mid)).collect();
            Some(Emitter { atom: tr.atom, first_pulse: k0 as u32, couplings })
        })
        .collect()
}

fn simulate_shot(
    shot: u32,
    config: &ScenarioConfig,
    sampler: Option<&TransitSampler>,
    table: &EmissionTable,
) -> Result<ShotResult> {
    let seed = config.run.seed;
    let (transits, emitters) = match (config.atoms.source, sampler) {
        (AtomSourceKind::Fountain, Some(s)) => {
            let transits = s.sample_shot(shot as u64, seed)?;
            let emitters = fountain_emitters(&transits, config);
            (transits, emitters)
        }
        _ => {
            let g = config.atoms.coupling * config.system.g0;
            let n = config.schedule.pulses_per_shot as usize;
            (Vec::new(), vec![Emitter { atom: 0, first_pulse: 0, couplings: vec![g; n] }])
        }
    };

    let repumper = Repumper {
        success_probability: config.pulse.repump_success,
        duration: config.schedule.repump_duration,
    };
    let mut rng = stream_rng(seed, streams::EMISSION + shot as u64);
    let mut photons = Vec::new();
    let mut tally = ShotTally::default();
    let mut exposures = Vec::with_capacity(emitters.len());
    for em in &emitters {
        let mut ready = true;
        for (i, &g) in em.couplings.iter().enumerate() {
            let pulse = em.first_pulse + i as u32;
            let outcome = if ready {
                tally.driven_pulses += 1;
                table.sample(g, &mut rng)
            } else {
                Outcome::NoEvent
            };
            match outcome {
                Outcome::CavityPhoton { t_emit } => {
                    tally.photons += 1;
                    photons.push(PhotonEvent { shot, pulse, atom: em.atom, t_emit: t_emit - table.t0(), coupling: g });
                }
                Outcome::SpontaneousLoss { .. } => tally.spontaneous += 1,
                Outcome::NoEvent => {}
            }
            if ready {
                ready = repumper.apply(&outcome, 0.0, &mut rng).ready;
                tally.repump_failures += u64::from(!ready);
            } else {
                // a failed repump is retried in the next window
                ready = repumper.apply(&Outcome::CavityPhoton { t_emit: 0.0 }, 0.0, &mut rng).ready;
            }
        }
        if config.atoms.source == AtomSourceKind::Fountain {
            exposures.push(PulseExposure {
                shot,
                atom: em.atom,
                first_pulse: em.first_pulse,
                p_cavity: em.couplings.iter().map(|&g| table.cavity_probability(g) as f32).collect(),
            });
        }
    }
    photons.sort_by_key(|p| (p.pulse, p.atom));

    let mut det_rng = stream_rng(seed, streams::DETECTION + shot as u64);
    let (clicks, hom) = synthesize_clicks(
        &photons,
        shot,
        &config.chain,
        &config.schedule,
        &config.interferometer,
        table,
        &mut det_rng,
    )?;
    Ok(ShotResult { clicks, transits, exposures, photons, tally, hom })
}

/// End-to-end run: transits, emissions and detector clicks for every shot.
/// Results depend only on the configuration, never on the thread count.
pub fn simulate(config: &ScenarioConfig) -> Result<SimulationOutput> {
    config.validate()?;
    let pulse = design_pulse(config)?;
    simulate_with(config, pulse)
}

/// As [`simulate`], reusing an already designed pulse.
pub fn simulate_with(config: &ScenarioConfig, pulse: DesignedPulse) -> Result<SimulationOutput> {
    let n_shots = u32::try_from(config.run.n_shots)
        .map_err(|_| Error::Config(vec!["run.n_shots exceeds the 32-bit shot index".into()]))?;
    simulate_range(config, pulse, 0..n_shots)
}

/// Shots `range` of the run only; concatenating consecutive ranges gives the
/// same records as one call over all shots.
pub fn simulate_range(config: &ScenarioConfig, pulse: DesignedPulse, range: Range<u32>) -> Result<SimulationOutput> {
    config.validate()?;
    let table = pulse.table(config)?;
    let sampler = match config.atoms.source {
        AtomSourceKind::Fountain => Some(TransitSampler::new(&config.launch, &config.mode, config.system.g0)?),
        AtomSourceKind::Stationary => None,
    };
    let shots = range
        .into_par_iter()
        .map(|s| simulate_shot(s, config, sampler.as_ref(), &table))
        .collect::<Result<Vec<_>>>()?;

    let mut truth = GroundTruth::default();
    let mut parts = Vec::with_capacity(shots.len());
    for s in shots {
        parts.push(s.clicks);
        truth.transits.extend(s.transits);
        truth.exposures.extend(s.exposures);
        truth.photons.extend(s.photons);
        truth.tally.driven_pulses += s.tally.driven_pulses;
        truth.tally.photons += s.tally.photons;
        truth.tally.spontaneous += s.tally.spontaneous;
        truth.tally.repump_failures += s.tally.repump_failures;
        truth.hom.interfering_pairs += s.hom.interfering_pairs;
        truth.hom.unpaired += s.hom.unpaired;
    }
    Ok(SimulationOutput { clicks: ClickStream::merge(parts), truth, pulse, config_hash: config.hash() })
}

/// Side-peak areas expected from the true exposures of a 50/50 HBT run:
/// peak `k` holds the mean number of D1 clicks on pulse `n` paired with D2
/// clicks on pulse `n + k`, without accidentals. The central peak comes only
/// from two atoms in the mode at once.
pub fn truth_peak_areas(truth: &GroundTruth, period: f64, k_max: usize, detection: f64) -> PeakAreas {
    let mut acc = vec![0.0; k_max + 1];
    let mut by_shot: BTreeMap<u32, Vec<&PulseExposure>> = BTreeMap::new();
    for e in &truth.exposures {
        by_shot.entry(e.shot).or_default().push(e);
    }
    for exps in by_shot.values() {
        let lo = exps.iter().map(|e| e.first_pulse).min().unwrap_or(0) as usize;
        let hi = exps.iter().map(|e| e.first_pulse as usize + e.p_cavity.len()).max().unwrap_or(0);
        let mut p = vec![0.0f64; hi.saturating_sub(lo)];
        let mut p2 = vec![0.0f64; p.len()];
        for e in exps {
            for (i, q) in e.p_cavity.iter().enumerate() {
                let q = detection * *q as f64;
                p[e.first_pulse as usize - lo + i] += q;
                p2[e.first_pulse as usize - lo + i] += q * q;
            }
        }
        // same pulse: two different atoms routed to different detectors
        acc[0] += 0.25 * p.iter().zip(&p2).map(|(s, s2)| s * s - s2).sum::<f64>();
        for (k, slot) in acc.iter_mut().enumerate().skip(1) {
            *slot += 0.25 * p.iter().zip(p.iter().skip(k)).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let k_max = k_max as i64;
    let peaks = (-k_max..=k_max).map(|k| (k, acc[k.unsigned_abs() as usize], 0.0)).collect();
    PeakAreas { period, half_width: 0.5 * period, peaks }
}

/// Sizes the global worker pool. Only the first call has an effect.
pub fn set_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config(vec!["--threads must be >= 1".into()]));
    }
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
