//! Uniformly sampled time series and pulse envelopes.

use crate::error::{Error, Result};

/// Relative tolerance used when checking that sample times are uniform.
const GRID_TOLERANCE: f64 = 1e-6;

/// Real-valued samples on a uniform grid `t_i = t0 + i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", format!("sample spacing must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::param("values", "time series needs at least one sample"));
        }
        Ok(Self { t0, dt, values })
    }

    /// Constant series over `n` samples.
    pub fn constant(t0: f64, dt: f64, n: usize, value: f64) -> Result<Self> {
        Self::new(t0, dt, vec![value; n])
    }

    /// Builds a series from `(t, value)` records, rejecting non-uniform grids.
    pub fn from_records(records: &[(f64, f64)]) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::param("records", "need at least two samples to infer spacing"));
        }
        let t0 = records[0].0;
        let dt = records[1].0 - t0;
        if !(dt > 0.0) {
            return Err(Error::NonUniformGrid { index: 1 });
        }
        for (i, &(t, _)) in records.iter().enumerate() {
            let expected = t0 + i as f64 * dt;
            if (t - expected).abs() > GRID_TOLERANCE * dt {
                return Err(Error::NonUniformGrid { index: i });
            }
        }
        Self::new(t0, dt, records.iter().map(|r| r.1).collect())
    }

    pub fn to_records(&self) -> Vec<(f64, f64)> {
        self.values.iter().enumerate().map(|(i, &v)| (self.t(i), v)).collect()
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t(self.values.len() - 1)
    }

    pub fn duration(&self) -> f64 {
        self.t_end() - self.t0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// True when `other` has the same start, spacing and length.
    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        self.values.len() == other.values.len()
            && (self.t0 - other.t0).abs() <= GRID_TOLERANCE * self.dt
            && (self.dt - other.dt).abs() <= GRID_TOLERANCE * self.dt
    }

    /// Trapezoidal integral of the squared samples.
    pub fn integral_sq(&self) -> f64 {
        trapezoid(&self.values.iter().map(|v| v * v).collect::<Vec<_>>(), self.dt)
    }

    /// Cubic (four-point Lagrange) interpolation at sample position `i + frac`.
    pub fn interpolate_index(&self, i: usize, frac: f64) -> f64 {
        cubic_at(&self.values, i, frac)
    }

    /// Interpolated value at time `t`; zero outside the sampled span.
    pub fn sample_at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        let last = (self.values.len() - 1) as f64;
        if !(x >= -1e-9) || x > last + 1e-9 {
            return 0.0;
        }
        let x = x.clamp(0.0, last);
        let i = (x.floor() as usize).min(self.values.len().saturating_sub(2));
        let frac = x - i as f64;
        cubic_at(&self.values, i, frac)
    }
}

/// Trapezoidal rule on uniform spacing.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

/// Four-point Lagrange interpolation between `v[i]` and `v[i + 1]`, falling
/// back to quadratic or linear stencils at the ends of the array.
pub(crate) fn cubic_at(v: &[f64], i: usize, frac: f64) -> f64 {
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    if frac == 0.0 {
        return v[i];
    }
    if n == 2 {
        return v[0] + frac * (v[1] - v[0]);
    }
    let x = frac;
    if i == 0 {
        // quadratic through 0, 1, 2
        let (a, b, c) = (v[0], v[1], v[2]);
        return a * (x - 1.0) * (x - 2.0) / 2.0 - b * x * (x - 2.0) + c * x * (x - 1.0) / 2.0;
    }
    if i + 2 >= n {
        // quadratic through n-3, n-2, n-1 evaluated at n-2 + x
        let (a, b, c) = (v[n - 3], v[n - 2], v[n - 1]);
        let y = x + 1.0;
        return a * (y - 1.0) * (y - 2.0) / 2.0 - b * y * (y - 2.0) + c * y * (y - 1.0) / 2.0;
    }
    let (p, a, b, q) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
    -p * x * (x - 1.0) * (x - 2.0) / 6.0 + a * (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0
        - b * (x + 1.0) * x * (x - 2.0) / 2.0
        + q * (x + 1.0) * x * (x - 1.0) / 6.0
}

/// Role of a sampled envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    RabiDrive,
    TargetPhotonAmplitude,
    Repump,
}

/// A sampled drive, repump or target photon envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    pub kind: EnvelopeKind,
    pub series: TimeSeries,
}

impl PulseEnvelope {
    pub fn new(kind: EnvelopeKind, series: TimeSeries) -> Self {
        Self { kind, series }
    }

    pub fn rabi_drive(series: TimeSeries) -> Self {
        Self::new(EnvelopeKind::RabiDrive, series)
    }

    pub fn dt(&self) -> f64 {
        self.series.dt()
    }

    pub fn values(&self) -> &[f64] {
        self.series.values()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.series.max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_uniform_records() {
        let recs = [(0.0, 1.0), (1.0, 2.0), (2.5, 3.0)];
        assert!(matches!(
            TimeSeries::from_records(&recs),
            Err(Error::NonUniformGrid { index: 2 })
        ));
        let ok = [(0.0, 1.0), (0.5, 2.0), (1.0, 3.0)];
        let s = TimeSeries::from_records(&ok).unwrap();
        assert_eq!(s.dt(), 0.5);
        assert_eq!(s.to_records(), ok.to_vec());
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let f = |x: f64| 0.3 * x * x * x - x * x + 2.0 * x - 1.0;
        let s = TimeSeries::new(0.0, 1.0, (0..8).map(|i| f(i as f64)).collect()).unwrap();
        for &x in &[1.25, 3.5, 4.75] {
            assert!((s.sample_at(x) - f(x)).abs() < 1e-12);
        }
        // quadratic stencils at the ends are exact for quadratics
        let g = |x: f64| x * x - 3.0 * x;
        let s = TimeSeries::new(0.0, 1.0, (0..5).map(|i| g(i as f64)).collect()).unwrap();
        assert!((s.sample_at(0.5) - g(0.5)).abs() < 1e-12);
        assert!((s.sample_at(3.5) - g(3.5)).abs() < 1e-12);
        assert_eq!(s.sample_at(-1.0), 0.0);
    }

    #[test]
    fn trapezoid_of_constant() {
        assert!((trapezoid(&[2.0; 11], 0.1) - 2.0).abs() < 1e-12);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }
}
