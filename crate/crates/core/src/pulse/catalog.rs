//! Named photon-shape targets.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::{EnvelopeKind, PulseEnvelope, TimeSeries};

const TOWER_BRIDGE_TABLE: &str = include_str!("../../data/tower_bridge.tsv");

/// Default sample spacing for target shapes.
pub const DEFAULT_TARGET_DT: f64 = 0.5e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeName {
    /// `psi(t) ∝ sin^2(pi t / T)`.
    Sin2,
    /// Silhouette tabulated in `data/tower_bridge.tsv`.
    TowerBridge,
    /// `(t, amplitude)` samples spanning the window; rescaled to the duration.
    Custom(Vec<(f64, f64)>),
}

impl FromStr for ShapeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin2" => Ok(ShapeName::Sin2),
            "tower_bridge" => Ok(ShapeName::TowerBridge),
            other => Err(Error::UnknownShape(other.to_string())),
        }
    }
}

/// A photon amplitude to be produced, normalised so that
/// `int |phi|^2 dt = p_target`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeTarget {
    pub envelope: PulseEnvelope,
    pub p_target: f64,
}

impl ShapeTarget {
    /// Validates the invariants and rescales `amplitude` to `p_target`.
    pub fn from_series(amplitude: TimeSeries, p_target: f64) -> Result<Self> {
        if !(p_target > 0.0 && p_target <= 1.0) {
            return Err(Error::param("p_target", format!("must lie in (0, 1], got {p_target}")));
        }
        let v = amplitude.values();
        let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !(peak > 0.0) {
            return Err(Error::param("shape", "target amplitude is identically zero"));
        }
        if v.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::param("shape", "target amplitude must be real and non-negative"));
        }
        let edge = v[0].abs().max(v[v.len() - 1].abs());
        if edge > 1e-9 * peak {
            return Err(Error::param(
                "shape",
                format!("target must vanish at both window edges (edge/peak = {:.3e})", edge / peak),
            ));
        }
        let norm = amplitude.integral_sq();
        let scale = (p_target / norm).sqrt();
        let mut amplitude = amplitude;
        amplitude.values_mut().iter_mut().for_each(|x| *x *= scale);
        Ok(Self {
            envelope: PulseEnvelope::new(EnvelopeKind::TargetPhotonAmplitude, amplitude),
            p_target,
        })
    }

    pub fn duration(&self) -> f64 {
        self.envelope.series.duration()
    }

    pub fn amplitude(&self) -> &[f64] {
        self.envelope.values()
    }

    /// `|phi|^2` normalised to unit area.
    pub fn unit_intensity(&self) -> Vec<f64> {
        self.envelope.values().iter().map(|x| x * x / self.p_target).collect()
    }
}

fn grid(duration: f64, dt: f64) -> Result<(usize, f64)> {
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(Error::param("duration", format!("duration and dt must be > 0 (got {duration}, {dt})")));
    }
    let n = ((duration / dt).round() as usize).max(8) + 1;
    Ok((n, duration / (n - 1) as f64))
}

/// Builds a normalised target on a `dt`-spaced grid over `[0, duration]`.
pub fn catalog_shape(name: &ShapeName, duration: f64, p_target: f64, dt: f64) -> Result<ShapeTarget> {
    let (n, dt) = grid(duration, dt)?;
    let values: Vec<f64> = match name {
        ShapeName::Sin2 => {
            // int sin^4 = 3T/8, so the peak is sqrt(8 p / 3T)
            let peak = (8.0 * p_target.max(0.0) / (3.0 * duration)).sqrt();
            let mut v: Vec<f64> =
                (0..n).map(|i| peak * (PI * i as f64 / (n - 1) as f64).sin().powi(2)).collect();
            v[0] = 0.0;
            v[n - 1] = 0.0;
            v
        }
        ShapeName::TowerBridge => resample(&tower_bridge_table()?, n)?,
        ShapeName::Custom(samples) => resample(samples, n)?,
    };
    ShapeTarget::from_series(TimeSeries::new(0.0, dt, values)?, p_target)
}

/// Parses a two-column `(t, amplitude)` text table; `#` starts a comment.
pub fn parse_shape_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let mut next = || -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::Format {
                    line: lineno + 1,
                    reason: "expected two columns".into(),
                })?
                .parse()
                .map_err(|e| Error::Format {
                    line: lineno + 1,
                    reason: format!("{e}"),
                })
        };
        let t = next()?;
        let a = next()?;
        out.push((t, a));
    }
    Ok(out)
}

pub fn tower_bridge_table() -> Result<Vec<(f64, f64)>> {
    parse_shape_table(TOWER_BRIDGE_TABLE)
}

/// Cubic Hermite (Catmull-Rom) resampling of arbitrary-spaced samples onto
/// `n` uniform points spanning the same range.
fn resample(samples: &[(f64, f64)], n: usize) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::param("shape", "custom shape needs at least three samples"));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::param("shape", "custom shape times must be strictly increasing"));
    }
    let peak = samples.iter().fold(0.0_f64, |m, s| m.max(s.1.abs()));
    let first = samples[0].1.abs();
    let last = samples[samples.len() - 1].1.abs();
    if first > 1e-9 * peak || last > 1e-9 * peak {
        return Err(Error::param("shape", "custom shape must start and end at zero"));
    }
    let (ta, tb) = (samples[0].0, samples[samples.len() - 1].0);
    let m = samples.len();
    let slope = |k: usize| -> f64 {
        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(m - 1));
        (samples[hi].1 - samples[lo].1) / (samples[hi].0 - samples[lo].0)
    };
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let t = ta + (tb - ta) * i as f64 / (n - 1) as f64;
        while k + 2 < m && samples[k + 1].0 <= t {
            k += 1;
        }
        let (t0, y0) = samples[k];
        let (t1, y1) = samples[k + 1];
        let h = t1 - t0;
        let s = ((t - t0) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * slope(k)
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * slope(k + 1);
        out.push(v.max(0.0));
    }
    out[0] = 0.0;
    out[n - 1] = 0.0;
    Ok(out)
}
