use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::chain::EfficiencyChain;
use super::clicks::{seconds_to_ps, ClickRecord, Detector};
use super::schedule::PulseSchedule;
use crate::error::Result;
use crate::qsim::EmissionTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferometerKind {
    Hbt,
    Hom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Parallel,
    Perpendicular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerConfig {
    pub kind: InterferometerKind,
    /// Extra delay of the long arm (HOM).
    pub delay_s: f64,
    pub polarization: Polarization,
    pub coherence_time_t: f64,
    /// Spread of the relative frequency offset of a photon pair, rad/s.
    /// Defaults to `sqrt(2) / T`.
    pub sigma_delta: Option<f64>,
    pub bs_reflectivity: f64,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            kind: InterferometerKind::Hbt,
            delay_s: 1e-6,
            polarization: Polarization::Parallel,
            coherence_time_t: 300e-9,
            sigma_delta: None,
            bs_reflectivity: 0.5,
        }
    }
}

impl InterferometerConfig {
    pub fn hom(polarization: Polarization) -> Self {
        Self { kind: InterferometerKind::Hom, polarization, ..Default::default() }
    }

    pub fn sigma_delta(&self) -> f64 {
        self.sigma_delta.unwrap_or(std::f64::consts::SQRT_2 / self.coherence_time_t)
    }

    /// Delay in whole pulse periods, if it is one.
    pub fn delay_periods(&self, period: f64) -> Option<u32> {
        let n = (self.delay_s / period).round();
        ((self.delay_s - n * period).abs() <= 1e-9 * period && n >= 1.0).then_some(n as u32)
    }

    pub fn violations(&self, schedule: &PulseSchedule) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.coherence_time_t > 0.0) {
            v.push(format!("interferometer.coherence_time_t must be > 0 (got {})", self.coherence_time_t));
        }
        if !(0.0..=1.0).contains(&self.bs_reflectivity) {
            v.push(format!("interferometer.bs_reflectivity must be in [0, 1] (got {})", self.bs_reflectivity));
        }
        if let Some(s) = self.sigma_delta {
            if !(s >= 0.0) {
                v.push(format!("interferometer.sigma_delta must be >= 0 (got {s})"));
            }
        }
        if self.kind == InterferometerKind::Hom {
            if self.delay_periods(schedule.period).is_none() {
                v.push(format!(
                    "interferometer.delay_s = {:e} s is not a whole number of {:e} s pulse periods",
                    self.delay_s, schedule.period
                ));
            }
            if (self.bs_reflectivity - 0.5).abs() > 1e-12 {
                v.push("HOM interference is modelled for a 50/50 beam splitter only".into());
            }
        }
        v
    }
}

/// A photon that left the cavity. `t_emit` is measured from the start of the
/// drive window of its pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonEvent {
    pub shot: u32,
    pub pulse: u32,
    pub atom: u32,
    pub t_emit: f64,
    pub coupling: f64,
}

/// Origin of a click, kept alongside the stream for closed-loop checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClickSource {
    Photon { shot: u32, pulse: u32, atom: u32 },
    Dark,
    RepumpScatter,
}

/// A photon reaching a detector, before detection efficiency and jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub t: f64,
    pub detector: Detector,
    pub source: ClickSource,
}

/// Photon amplitude shapes, indexed by the coupling the emitter saw.
pub trait Wavepacket: Sync {
    /// Amplitude at time `t` after the start of the drive window; any
    /// normalisation.
    fn amplitude(&self, coupling: f64, t: f64) -> f64;
}

impl Wavepacket for EmissionTable {
    fn amplitude(&self, coupling: f64, t: f64) -> f64 {
        self.amplitude_at(coupling, self.t0() + t)
    }
}

/// Identical shapes for every photon, for tests and idealised runs.
impl<F: Fn(f64) -> f64 + Sync> Wavepacket for F {
    fn amplitude(&self, _coupling: f64, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClickStream {
    pub records: Vec<ClickRecord>,
    pub sources: Vec<ClickSource>,
}

impl ClickStream {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Merges streams and sorts by time, then detector.
    pub fn merge(parts: impl IntoIterator<Item = ClickStream>) -> Self {
        let mut pairs: Vec<(ClickRecord, ClickSource)> = parts
            .into_iter()
            .flat_map(|p| p.records.into_iter().zip(p.sources))
            .collect();
        pairs.sort_by_key(|(r, _)| (r.t_ps, r.detector));
        let (records, sources) = pairs.into_iter().unzip();
        Self { records, sources }
    }
}

/// Keeps each photon with probability `eta`.
pub fn thin<T: Copy, R: Rng + ?Sized>(items: &[T], eta: f64, rng: &mut R) -> Vec<T> {
    items.iter().copied().filter(|_| rng.random::<f64>() < eta).collect()
}

fn photon_source(p: &PhotonEvent) -> ClickSource {
    ClickSource::Photon { shot: p.shot, pulse: p.pulse, atom: p.atom }
}

/// Beam-splitter routing of independent photons: D1 with probability
/// `reflectivity`, otherwise D2.
pub fn route_hbt<R: Rng + ?Sized>(
    photons: &[PhotonEvent],
    schedule: &PulseSchedule,
    reflectivity: f64,
    rng: &mut R,
) -> Vec<Arrival> {
    photons
        .iter()
        .map(|p| Arrival {
            t: schedule.drive_start_time(p.shot, p.pulse) + p.t_emit,
            detector: if rng.random::<f64>() < reflectivity { Detector::D1 } else { Detector::D2 },
            source: photon_source(p),
        })
        .collect()
}

/// Counters from [`route_hom`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomStats {
    /// Slots in which one long-arm and one short-arm photon met.
    pub interfering_pairs: usize,
    /// Photons that met no partner at the second beam splitter.
    pub unpaired: usize,
}

/// Unbalanced Mach–Zehnder with a long arm of `delay_s`: each photon takes
/// either arm, and a long-arm photon from pulse `n` meets a short-arm photon
/// from pulse `n + d` at the second splitter.
///
/// Such a pair, emitted at `t_a`, `t_b` within their drive windows, leaves by
/// different ports with probability `|A - B|^2 / (2 (|A|^2 + |B|^2))` with
/// `A = psi_a(t_a) psi_b(t_b) e^{-i D t_a}` and
/// `B = psi_b(t_a) psi_a(t_b) e^{-i D t_b}`, where the relative frequency
/// offset `D ~ N(0, sigma_delta)` is drawn per pair; otherwise both leave by
/// the same port. Perpendicular polarisation, or more than two photons in a
/// slot, routes photons independently.
pub fn route_hom<R: Rng + ?Sized>(
    photons: &[PhotonEvent],
    schedule: &PulseSchedule,
    config: &InterferometerConfig,
    shapes: &dyn Wavepacket,
    rng: &mut R,
) -> (Vec<Arrival>, HomStats) {
    let d = config.delay_periods(schedule.period).unwrap_or(1);
    let delay = d as f64 * schedule.period;
    // (slot, long arm, photon)
    let mut legs: Vec<(u32, u32, bool, PhotonEvent)> = photons
        .iter()
        .map(|p| {
            let long = rng.random::<f64>() < 0.5;
            (p.shot, p.pulse + if long { d } else { 0 }, long, *p)
        })
        .collect();
    legs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.3.t_emit.total_cmp(&b.3.t_emit)));

    let mut out = Vec::with_capacity(legs.len());
    let mut stats = HomStats::default();
    let random_port = |rng: &mut R| if rng.random::<f64>() < 0.5 { Detector::D1 } else { Detector::D2 };
    let arrival = |leg: &(u32, u32, bool, PhotonEvent), detector| Arrival {
        t: schedule.drive_start_time(leg.3.shot, leg.3.pulse) + leg.3.t_emit + if leg.2 { delay } else { 0.0 },
        detector,
        source: photon_source(&leg.3),
    };

    let mut i = 0;
    while i < legs.len() {
        let mut j = i + 1;
        while j < legs.len() && (legs[j].0, legs[j].1) == (legs[i].0, legs[i].1) {
            j += 1;
        }
        let group = &legs[i..j];
        let pair = group.len() == 2 && group[0].2 != group[1].2;
        if pair {
            stats.interfering_pairs += 1;
        } else if group.len() == 1 {
            stats.unpaired += 1;
        }
        if pair && config.polarization == Polarization::Parallel {
            let (a, b) = if group[0].2 { (&group[0], &group[1]) } else { (&group[1], &group[0]) };
            let (ta, tb) = (a.3.t_emit, b.3.t_emit);
            let delta = config.sigma_delta() * rng.sample::<f64, _>(StandardNormal);
            let p_split = split_probability(shapes, a.3.coupling, b.3.coupling, ta, tb, delta);
            if rng.random::<f64>() < p_split {
                let da = random_port(rng);
                out.push(arrival(a, da));
                out.push(arrival(b, da.other()));
            } else {
                let port = random_port(rng);
                out.push(arrival(a, port));
                out.push(arrival(b, port));
            }
        } else {
            for leg in group {
                out.push(arrival(leg, random_port(rng)));
            }
        }
        i = j;
    }
    (out, stats)
}

/// Probability that a two-photon pair exits by different ports.
pub fn split_probability(shapes: &dyn Wavepacket, ga: f64, gb: f64, ta: f64, tb: f64, delta: f64) -> f64 {
    use num_complex::Complex64;
    let a = shapes.amplitude(ga, ta) * shapes.amplitude(gb, tb);
    let b = shapes.amplitude(gb, ta) * shapes.amplitude(ga, tb);
    let amp_a = Complex64::from_polar(a, -delta * ta);
    let amp_b = Complex64::from_polar(b, -delta * tb);
    let dist = a * a + b * b;
    if dist <= 0.0 {
        return 0.5;
    }
    ((amp_a - amp_b).norm_sqr() / (2.0 * dist)).clamp(0.0, 1.0)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Detected clicks for one shot: detection efficiency and jitter applied to
/// the arrivals, plus dark counts over the whole shot and repump scatter
/// inside repump windows.
pub fn detect<R: Rng + ?Sized>(
    arrivals: &[Arrival],
    shot: u32,
    chain: &EfficiencyChain,
    schedule: &PulseSchedule,
    rng: &mut R,
) -> ClickStream {
    let start = schedule.shot_start(shot);
    let end = start + schedule.shot_duration();
    let mut events: Vec<(f64, Detector, ClickSource)> = Vec::new();
    for a in arrivals {
        if rng.random::<f64>() < chain.eta_detector {
            let jitter = chain.detector_jitter_sigma * rng.sample::<f64, _>(StandardNormal);
            events.push((a.t + jitter, a.detector, a.source));
        }
    }
    for det in [Detector::D1, Detector::D2] {
        let n = poisson(chain.dark_rate_hz * schedule.shot_duration(), rng);
        for _ in 0..n {
            events.push((rng.random_range(start..end), det, ClickSource::Dark));
        }
        if chain.repump_scatter_rate_hz > 0.0 {
            let (r0, r1) = schedule.repump_window();
            let live = schedule.pulses_per_shot as f64 * (r1 - r0);
            let n = poisson(chain.repump_scatter_rate_hz * live, rng);
            for _ in 0..n {
                let k = rng.random_range(0..schedule.pulses_per_shot);
                let t = schedule.pulse_start(shot, k) + rng.random_range(r0..r1);
                events.push((t, det, ClickSource::RepumpScatter));
            }
        }
    }
    let mut pairs: Vec<(ClickRecord, ClickSource)> = events
        .into_iter()
        .filter(|(t, _, _)| *t >= start && *t < end)
        .map(|(t, detector, source)| {
            let pos = schedule.locate(t);
            let record = ClickRecord {
                t_ps: seconds_to_ps(t),
                detector,
                pulse_index: pos.pulse,
                shot_index: shot,
                in_repump_window: schedule.in_repump(pos.phase),
            };
            (record, source)
        })
        .collect();
    pairs.sort_by_key(|(r, _)| (r.t_ps, r.detector));
    let (records, sources) = pairs.into_iter().unzip();
    ClickStream { records, sources }
}

/// Clicks from the photons of one shot.
///
/// Photons first survive outcoupling and collection, then pass the
/// interferometer and finally the detectors.
pub fn synthesize_clicks<R: Rng + ?Sized>(
    photons: &[PhotonEvent],
    shot: u32,
    chain: &EfficiencyChain,
    schedule: &PulseSchedule,
    interferometer: &InterferometerConfig,
    shapes: &dyn Wavepacket,
    rng: &mut R,
) -> Result<(ClickStream, HomStats)> {
    schedule.validate()?;
    let kept = thin(photons, chain.transport(), rng);
    let (arrivals, stats) = match interferometer.kind {
        InterferometerKind::Hbt => (route_hbt(&kept, schedule, interferometer.bs_reflectivity, rng), HomStats::default()),
        InterferometerKind::Hom => route_hom(&kept, schedule, interferometer, shapes, rng),
    };
    Ok((detect(&arrivals, shot, chain, schedule, rng), stats))
}
