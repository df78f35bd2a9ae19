use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::photostream::{ClickRecord, PulseSchedule};

/// Click times folded onto the drive window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeHistogram {
    /// Bin edges relative to the start of the drive window.
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Expected flat background per bin, from clicks in the idle gaps of the
    /// sequence (neither drive nor repump).
    pub background_per_bin: f64,
}

impl ShapeHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }
}

pub fn recover_shape(records: &[ClickRecord], schedule: &PulseSchedule, n_bins: usize) -> ShapeHistogram {
    let (d0, d1) = schedule.drive_window();
    let width = (d1 - d0) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    let mut gap = 0u64;
    for r in records {
        let phase = schedule.locate(r.t()).phase;
        if schedule.in_drive(phase) {
            let k = (((phase - d0) / width) as usize).min(n_bins - 1);
            counts[k] += 1;
        } else if !r.in_repump_window && !schedule.in_repump(phase) {
            gap += 1;
        }
    }
    let (r0, r1) = schedule.repump_window();
    let gap_len = schedule.period - (d1 - d0) - (r1 - r0);
    let background_per_bin = if gap_len > 0.0 { gap as f64 * width / gap_len } else { 0.0 };
    ShapeHistogram { bin_width: width, counts, background_per_bin }
}

/// Integral of `sin^4(pi t / T)` over each of `n_bins` equal bins of `[0, T]`.
pub fn sin4_bins(n_bins: usize) -> Vec<f64> {
    let f = |x: f64| 3.0 * x / 8.0 - (2.0 * x).sin() / 4.0 + (4.0 * x).sin() / 32.0;
    (0..n_bins)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / n_bins as f64;
            let b = std::f64::consts::PI * (i + 1) as f64 / n_bins as f64;
            f(b) - f(a)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub n_events: u64,
}

/// Pearson test of the histogram against `model` (relative weights per bin)
/// plus the measured flat background. The signal normalisation is fixed by
/// the total; bins expecting fewer than five counts are pooled.
pub fn shape_chi2(hist: &ShapeHistogram, model: &[f64]) -> Result<ChiSquareTest> {
    if model.len() != hist.counts.len() {
        return Err(Error::GridMismatch(format!("{} model bins for {} histogram bins", model.len(), hist.counts.len())));
    }
    let total = hist.total() as f64;
    let bg = hist.background_per_bin;
    let signal = (total - bg * model.len() as f64).max(0.0);
    let norm: f64 = model.iter().sum();
    if total == 0.0 || norm <= 0.0 {
        return Err(Error::InsufficientStatistics("empty histogram".into()));
    }
    let mut chi2 = 0.0;
    let mut used = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &m) in hist.counts.iter().zip(model) {
        let e = signal * m / norm + bg;
        pool_o += o as f64;
        pool_e += e;
        if pool_e >= 5.0 {
            chi2 += (pool_o - pool_e).powi(2) / pool_e;
            used += 1;
            pool_o = 0.0;
            pool_e = 0.0;
        }
    }
    if pool_e > 0.0 {
        chi2 += (pool_o - pool_e).powi(2) / pool_e;
        used += 1;
    }
    if used < 2 {
        return Err(Error::InsufficientStatistics("too few populated bins".into()));
    }
    let dof = used - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).map_err(|e| Error::Fit(e.to_string()))?.cdf(chi2);
    Ok(ChiSquareTest { chi2, dof, p_value, n_events: hist.total() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sin4_bins_integrate_to_three_eighths_pi() {
        let b = sin4_bins(35);
        let total: f64 = b.iter().sum();
        assert!((total - 3.0 * std::f64::consts::PI / 8.0).abs() < 1e-12);
        assert!((b[0] - b[34]).abs() < 1e-15);
    }

    #[test]
    fn exact_histogram_passes() {
        let model = sin4_bins(20);
        let norm: f64 = model.iter().sum();
        let counts = model.iter().map(|m| (1e5 * m / norm).round() as u64).collect();
        let h = ShapeHistogram { bin_width: 1.0, counts, background_per_bin: 0.0 };
        assert!(shape_chi2(&h, &model).unwrap().p_value > 0.99);
    }
}
