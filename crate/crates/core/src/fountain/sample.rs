use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use super::launch::{LaunchConfig, ModeGeometry};
use super::transit::{level_intervals, AtomTransit, Ballistic};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

/// Fraction of `g0` below which the coupling is clipped from transit records.
pub const CLIP_FRACTION: f64 = 0.01;

/// Proposals tried per atom before the configuration is declared unreachable.
const MAX_ATTEMPTS: u64 = 50_000_000;

/// Velocity cut in units of the thermal spread; beyond it atoms are dropped.
const VELOCITY_CUT: f64 = 8.0;

const SCAN_POINTS: usize = 256;

/// Draws launched atoms conditioned on crossing the clipped mode region.
///
/// The vertical coordinates are sampled from the cloud directly. Given them,
/// each pass through the mode's vertical band defines a small box in the
/// horizontal phase space that contains every entering trajectory, and
/// horizontal coordinates are proposed from a mixture over these boxes and
/// accepted so that the result follows the unconditioned cloud distribution
/// restricted to entering atoms.
#[derive(Debug, Clone)]
pub struct TransitSampler {
    launch: LaunchConfig,
    mode: ModeGeometry,
    g0: f64,
    sigma_x: f64,
    sigma_v: f64,
    radius: f64,
    v_cut: f64,
    weight_cap: f64,
}

#[derive(Debug, Clone, Copy)]
struct Window {
    t_ref: f64,
    half: f64,
}

#[derive(Debug, Clone, Copy)]
struct AxisBox {
    t_ref: f64,
    bound: f64,
    spread: f64,
    weight: f64,
}

impl TransitSampler {
    pub fn new(launch: &LaunchConfig, mode: &ModeGeometry, g0: f64) -> Result<Self> {
        let mut problems = launch.violations();
        problems.extend(mode.violations());
        if !(g0 > 0.0) {
            problems.push(format!("g0 must be > 0 (got {g0})"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        let sigma_v = launch.thermal_velocity_sigma();
        let mut s = Self {
            launch: launch.clone(),
            mode: *mode,
            g0,
            sigma_x: launch.cloud_radius_sigma,
            sigma_v,
            radius: mode.radius_at(CLIP_FRACTION),
            v_cut: VELOCITY_CUT * sigma_v,
            weight_cap: 2.0,
        };
        let longest = Window { t_ref: 0.0, half: (4.0 * s.radius / launch.gravity).sqrt() };
        let bx = s.axis_box(longest, 0.5 * mode.cavity_length);
        let by = s.axis_box(longest, s.radius);
        s.weight_cap = (2.0 * bx.weight * by.weight).min(2.0);
        Ok(s)
    }

    pub fn launch(&self) -> &LaunchConfig {
        &self.launch
    }

    pub fn mode(&self) -> &ModeGeometry {
        &self.mode
    }

    fn windows(&self, z0: f64, vz: f64) -> Vec<Window> {
        let g = self.launch.gravity;
        let r = self.radius;
        let t_a = vz / g;
        let z_a = z0 + vz * vz / (2.0 * g);
        if vz <= 0.0 || z_a < -r {
            return Vec::new();
        }
        let outer = (2.0 * (z_a + r) / g).sqrt();
        if z_a <= r {
            vec![Window { t_ref: t_a, half: outer }]
        } else {
            let inner = (2.0 * (z_a - r) / g).sqrt();
            let half = 0.5 * (outer - inner);
            let mid = 0.5 * (outer + inner);
            vec![Window { t_ref: t_a - mid, half }, Window { t_ref: t_a + mid, half }]
        }
    }

    /// Box for one horizontal axis with half-width `extent` at the reference time.
    fn axis_box(&self, w: Window, extent: f64) -> AxisBox {
        let spread = (self.sigma_x.powi(2) + (self.sigma_v * w.t_ref).powi(2)).sqrt();
        let bound = extent + self.v_cut * w.half;
        let uniform = if spread > 0.0 {
            2.0 * bound / ((2.0 * std::f64::consts::PI).sqrt() * spread)
        } else {
            f64::INFINITY
        };
        AxisBox { t_ref: w.t_ref, bound, spread, weight: uniform.min(1.0) }
    }

    fn in_box(&self, b: &AxisBox, x0: f64, v: f64) -> bool {
        v.abs() <= self.v_cut && (x0 + v * b.t_ref).abs() <= b.bound
    }

    /// One proposal for `(x0, v)` from the box, or `None` if rejected.
    fn propose_axis<R: Rng + ?Sized>(&self, b: &AxisBox, rng: &mut R) -> Option<(f64, f64)> {
        if b.weight >= 1.0 {
            let x0 = self.sigma_x * rng.sample::<f64, _>(StandardNormal);
            let v = self.sigma_v * rng.sample::<f64, _>(StandardNormal);
            return self.in_box(b, x0, v).then_some((x0, v));
        }
        let xr = rng.random_range(-b.bound..=b.bound);
        if rng.random::<f64>() >= (-0.5 * (xr / b.spread).powi(2)).exp() {
            return None;
        }
        let s2 = b.spread * b.spread;
        let mean = xr * self.sigma_v * self.sigma_v * b.t_ref / s2;
        let sd = self.sigma_v * self.sigma_x / b.spread;
        let v = mean + sd * rng.sample::<f64, _>(StandardNormal);
        if v.abs() > self.v_cut {
            return None;
        }
        Some((xr - v * b.t_ref, v))
    }

    /// Intervals during which the trajectory is inside the envelope level
    /// `level` and between the mirrors, searched inside one window.
    fn level_set(&self, traj: &Ballistic, w: Window, level: f64) -> Vec<(f64, f64)> {
        let half_len = 0.5 * self.mode.cavity_length;
        let (mut a, mut b) = (w.t_ref - w.half, w.t_ref + w.half);
        let [x0, _, _] = traj.position;
        let vx = traj.velocity[0];
        if vx != 0.0 {
            let t1 = (-half_len - x0) / vx;
            let t2 = (half_len - x0) / vx;
            a = a.max(t1.min(t2));
            b = b.min(t1.max(t2));
        } else if x0.abs() > half_len {
            return Vec::new();
        }
        let r2 = self.mode.waist_w0.powi(2) * (1.0 / level).ln();
        level_intervals(a, b, SCAN_POINTS, |t| {
            let [_, y, z] = traj.position_at(t);
            y * y + z * z <= r2
        })
    }

    fn build_transit(&self, traj: &Ballistic, shot: u64, atom: u32, span: (f64, f64)) -> AtomTransit {
        let w = Window { t_ref: 0.5 * (span.0 + span.1), half: 0.5 * (span.1 - span.0) };
        let waist: f64 = self
            .level_set(traj, w, (-1.0f64).exp())
            .iter()
            .map(|(a, b)| b - a)
            .sum();
        let mut transit = AtomTransit {
            shot,
            atom,
            t_enter: span.0,
            t_exit: span.1,
            trajectory: *traj,
            mode: self.mode,
            g0: self.g0,
            waist_duration: waist,
            t_peak: span.0,
            peak_envelope: 0.0,
        };
        // r^2(t) is a quartic with at most two minima; a scan plus golden
        // refinement around the best sample locates the closest approach.
        let n = SCAN_POINTS;
        let h = (span.1 - span.0) / n as f64;
        let idx = (0..=n)
            .map(|i| (i, transit.envelope(span.0 + i as f64 * h)))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
            .0;
        let (mut lo, mut hi) = (span.0 + idx.saturating_sub(1) as f64 * h, span.0 + ((idx + 1).min(n)) as f64 * h);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            if transit.envelope(m1) >= transit.envelope(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        transit.t_peak = 0.5 * (lo + hi);
        transit.peak_envelope = transit.envelope(transit.t_peak);
        transit
    }

    /// One atom that enters the mode region, with its transits.
    pub fn sample_entering<R: Rng + ?Sized>(&self, shot: u64, atom: u32, rng: &mut R) -> Result<Vec<AtomTransit>> {
        let h = self.launch.launch_height;
        let v_launch = self.launch.launch_velocity();
        for _ in 0..MAX_ATTEMPTS {
            let z0 = -h + self.sigma_x * rng.sample::<f64, _>(StandardNormal);
            let vz = v_launch + self.sigma_v * rng.sample::<f64, _>(StandardNormal);
            let windows = self.windows(z0, vz);
            if windows.is_empty() {
                continue;
            }
            let boxes: Vec<(AxisBox, AxisBox)> = windows
                .iter()
                .map(|&w| (self.axis_box(w, 0.5 * self.mode.cavity_length), self.axis_box(w, self.radius)))
                .collect();
            let weights: Vec<f64> = boxes.iter().map(|(bx, by)| bx.weight * by.weight).collect();
            let total: f64 = weights.iter().sum();
            if rng.random::<f64>() * self.weight_cap >= total {
                continue;
            }
            let pick = if weights.len() == 2 && rng.random::<f64>() * total >= weights[0] { 1 } else { 0 };
            let (bx, by) = &boxes[pick];
            let Some((x0, vx)) = self.propose_axis(bx, rng) else { continue };
            let Some((y0, vy)) = self.propose_axis(by, rng) else { continue };
            let covering = boxes
                .iter()
                .filter(|(bx, by)| self.in_box(bx, x0, vx) && self.in_box(by, y0, vy))
                .count();
            if covering > 1 && rng.random::<f64>() * covering as f64 >= 1.0 {
                continue;
            }
            let traj = Ballistic {
                position: [x0, y0, z0],
                velocity: [vx, vy, vz],
                gravity: self.launch.gravity,
            };
            let spans: Vec<(f64, f64)> = windows
                .iter()
                .flat_map(|&w| self.level_set(&traj, w, CLIP_FRACTION))
                .collect();
            if spans.is_empty() {
                continue;
            }
            return Ok(spans.into_iter().map(|s| self.build_transit(&traj, shot, atom, s)).collect());
        }
        Err(Error::param(
            "launch",
            format!("no atom reached the mode in {MAX_ATTEMPTS} proposals; check launch height and detuning"),
        ))
    }

    /// All transits of one shot, sorted by entry time.
    pub fn sample_shot(&self, shot: u64, seed: u64) -> Result<Vec<AtomTransit>> {
        let mut rng = stream_rng(seed, streams::FOUNTAIN + shot);
        let n_atoms = poisson(self.launch.atom_flux, &mut rng);
        let mut out = Vec::new();
        for atom in 0..n_atoms {
            out.extend(self.sample_entering(shot, atom as u32, &mut rng)?);
        }
        out.sort_by(|a, b| a.t_enter.total_cmp(&b.t_enter));
        Ok(out)
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Transits for `n_shots` shots. Each shot draws from its own stream of `seed`.
pub fn sample_transits(
    launch: &LaunchConfig,
    mode: &ModeGeometry,
    g0: f64,
    n_shots: u64,
    seed: u64,
) -> Result<Vec<Vec<AtomTransit>>> {
    let sampler = TransitSampler::new(launch, mode, g0)?;
    (0..n_shots).into_par_iter().map(|shot| sampler.sample_shot(shot, seed)).collect()
}

/// Fraction of transits that overlap in time with a transit of a different
/// atom of the same shot.
pub fn two_atom_fraction(shots: &[Vec<AtomTransit>]) -> f64 {
    let mut total = 0usize;
    let mut shared = 0usize;
    for shot in shots {
        total += shot.len();
        shared += shot
            .iter()
            .filter(|a| shot.iter().any(|b| b.atom != a.atom && a.overlaps(b)))
            .count();
    }
    if total == 0 {
        0.0
    } else {
        shared as f64 / total as f64
    }
}

/// Mean entering atoms per shot for which a fraction `target` of transits
/// overlaps with another atom, estimated from `n_probe` pairs of entering atoms.
///
/// With Poisson arrivals at mean `lambda` and pairwise overlap probability
/// `q`, the overlapped fraction is `1 - exp(-lambda q)`.
pub fn calibrate_atom_flux(
    launch: &LaunchConfig,
    mode: &ModeGeometry,
    target: f64,
    n_probe: u64,
    seed: u64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::param("target", format!("overlap fraction must be in (0, 1), got {target}")));
    }
    let sampler = TransitSampler::new(launch, mode, 1.0)?;
    let hits: Result<Vec<(usize, usize)>> = (0..n_probe)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, streams::CALIBRATION + k);
            let a = sampler.sample_entering(0, 0, &mut rng)?;
            let b = sampler.sample_entering(0, 1, &mut rng)?;
            let overlapped = a.iter().filter(|ta| b.iter().any(|tb| ta.overlaps(tb))).count();
            Ok((overlapped, a.len()))
        })
        .collect();
    let (overlapped, transits) = hits?.into_iter().fold((0, 0), |s, h| (s.0 + h.0, s.1 + h.1));
    if overlapped == 0 {
        return Err(Error::Fit(format!("no overlapping pairs in {n_probe} probes; increase the probe count")));
    }
    let q = overlapped as f64 / transits as f64;
    Ok(-(1.0 - target).ln() / q)
}

/// Median interaction duration over the transits that reach the waist.
pub fn median_duration(shots: &[Vec<AtomTransit>]) -> Option<f64> {
    let mut d: Vec<f64> = shots
        .iter()
        .flatten()
        .filter(|t| t.reaches_waist())
        .map(|t| t.duration())
        .collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    Some(d[d.len() / 2])
}
