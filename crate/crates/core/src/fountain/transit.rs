use serde::{Deserialize, Serialize};

use super::launch::ModeGeometry;
use crate::error::Result;
use crate::series::TimeSeries;

/// Free flight under gravity, referenced to the launch instant `t = 0`.
/// `z` points up and the mode centre is the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ballistic {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub gravity: f64,
}

impl Ballistic {
    pub fn position_at(&self, t: f64) -> [f64; 3] {
        let [x, y, z] = self.position;
        let [vx, vy, vz] = self.velocity;
        [x + vx * t, y + vy * t, z + vz * t - 0.5 * self.gravity * t * t]
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 3] {
        let [vx, vy, vz] = self.velocity;
        [vx, vy, vz - self.gravity * t]
    }

    /// Vertical mechanical energy per unit mass, `v_z^2 / 2 + g z`.
    pub fn vertical_energy(&self, t: f64) -> f64 {
        let vz = self.velocity_at(t)[2];
        0.5 * vz * vz + self.gravity * self.position_at(t)[2]
    }

    pub fn apex_time(&self) -> f64 {
        self.velocity[2] / self.gravity
    }

    pub fn apex_height(&self) -> f64 {
        self.position_at(self.apex_time())[2]
    }
}

/// One passage of one atom through the clipped mode region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTransit {
    pub shot: u64,
    /// Index of the atom within its shot; an atom that passes twice yields
    /// two transits with the same index.
    pub atom: u32,
    pub t_enter: f64,
    pub t_exit: f64,
    pub trajectory: Ballistic,
    pub mode: ModeGeometry,
    pub g0: f64,
    /// Time spent with envelope above `1/e`.
    pub waist_duration: f64,
    /// Time of closest approach to the mode axis.
    pub t_peak: f64,
    pub peak_envelope: f64,
}

/// One sample of an exported trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub g: f64,
}

impl AtomTransit {
    pub fn position(&self, t: f64) -> [f64; 3] {
        self.trajectory.position_at(t)
    }

    /// `g(t) = g0 cos(2 pi x / lambda) exp(-(y^2 + z^2) / w0^2)`.
    pub fn coupling(&self, t: f64) -> f64 {
        let [x, y, z] = self.position(t);
        self.g0 * self.mode.relative_coupling(x, y, z)
    }

    /// Envelope of the coupling, without the standing-wave factor.
    pub fn envelope(&self, t: f64) -> f64 {
        let [x, y, z] = self.position(t);
        self.mode.envelope(x, y, z)
    }

    pub fn clip_duration(&self) -> f64 {
        self.t_exit - self.t_enter
    }

    /// Interaction time, counted where the envelope exceeds `1/e`.
    pub fn duration(&self) -> f64 {
        self.waist_duration
    }

    /// Whether the atom comes closer to the axis than the waist.
    pub fn reaches_waist(&self) -> bool {
        self.waist_duration > 0.0
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_enter && t <= self.t_exit
    }

    pub fn overlaps(&self, other: &AtomTransit) -> bool {
        self.t_enter <= other.t_exit && other.t_enter <= self.t_exit
    }

    /// `|g|` at closest approach to the axis.
    pub fn peak_coupling(&self) -> f64 {
        self.coupling(self.t_peak).abs()
    }

    /// Coupling sampled every `dt` from `t_enter`.
    pub fn g_of_t(&self, dt: f64) -> Result<TimeSeries> {
        let n = ((self.clip_duration() / dt).floor() as usize) + 1;
        let values = (0..n).map(|i| self.coupling(self.t_enter + i as f64 * dt)).collect();
        TimeSeries::new(self.t_enter, dt, values)
    }

    pub fn samples(&self, dt: f64) -> Vec<TransitSample> {
        let n = ((self.clip_duration() / dt).floor() as usize) + 1;
        (0..n)
            .map(|i| {
                let t = self.t_enter + i as f64 * dt;
                let [x, y, z] = self.position(t);
                TransitSample { t, x, y, z, g: self.coupling(t) }
            })
            .collect()
    }
}

/// Writes transits as whitespace-separated `shot atom t x y z g` rows.
pub fn write_transit_table<W: std::io::Write>(
    transits: &[AtomTransit],
    dt: f64,
    mut out: W,
) -> Result<()> {
    writeln!(out, "# shot atom t_s x_m y_m z_m g_rad_per_s")?;
    for tr in transits {
        for s in tr.samples(dt) {
            writeln!(out, "{} {} {:.9e} {:.6e} {:.6e} {:.6e} {:.6e}", tr.shot, tr.atom, s.t, s.x, s.y, s.z, s.g)?;
        }
    }
    Ok(())
}

/// Sub-intervals of `[a, b]` on which `inside(t)` holds, located by a uniform
/// scan followed by bisection of each crossing.
pub(crate) fn level_intervals(a: f64, b: f64, scan: usize, inside: impl Fn(f64) -> bool) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    let bisect = |mut lo: f64, mut hi: f64, lo_inside: bool| {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) == lo_inside {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let h = (b - a) / scan as f64;
    let mut out = Vec::new();
    let mut prev_t = a;
    let mut prev = inside(a);
    let mut start = if prev { Some(a) } else { None };
    for i in 1..=scan {
        let t = if i == scan { b } else { a + i as f64 * h };
        let now = inside(t);
        if now != prev {
            let edge = bisect(prev_t, t, prev);
            if now {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
        }
        prev = now;
        prev_t = t;
    }
    if let Some(s) = start {
        out.push((s, b));
    }
    out
}
