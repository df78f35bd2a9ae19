use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photostream::PulseSchedule;

/// Windows, repeated every `period` from `t = 0`, whose clicks are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicMask {
    pub period: f64,
    pub windows: Vec<(f64, f64)>,
}

impl PeriodicMask {
    pub fn none(period: f64) -> Self {
        Self { period, windows: Vec::new() }
    }

    /// Masks the repump windows of a schedule.
    pub fn repump(schedule: &PulseSchedule) -> Self {
        let w = schedule.repump_window();
        let windows = if w.1 > w.0 { vec![w] } else { Vec::new() };
        Self { period: schedule.period, windows }
    }

    pub fn is_masked(&self, t: f64) -> bool {
        if self.windows.is_empty() {
            return false;
        }
        let phase = t.rem_euclid(self.period);
        self.windows.iter().any(|&(a, b)| phase >= a && phase < b)
    }

    pub fn live_fraction(&self) -> f64 {
        1.0 - self.windows.iter().map(|(a, b)| b - a).sum::<f64>() / self.period
    }

    /// Fraction of time at which both `t` and `t + tau` are live.
    pub fn live_overlap(&self, tau: f64) -> f64 {
        if self.windows.is_empty() {
            return 1.0;
        }
        let n = 2000;
        let h = self.period / n as f64;
        let live = (0..n)
            .filter(|&i| {
                let t = (i as f64 + 0.5) * h;
                !self.is_masked(t) && !self.is_masked(t + tau)
            })
            .count();
        live as f64 / n as f64
    }

    pub fn apply(&self, times: &[f64]) -> Vec<f64> {
        times.iter().copied().filter(|&t| !self.is_masked(t)).collect()
    }
}

/// Coincidences of `t1 - t2` in uniform bins over `[-max_tau, max_tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationHistogram {
    pub bin_width: f64,
    pub max_tau: f64,
    pub counts: Vec<u64>,
    pub mask: PeriodicMask,
    /// Expected uncorrelated coincidences per bin, from the singles rates.
    pub accidental: Vec<f64>,
    pub singles: (usize, usize),
    pub duration: f64,
}

impl CorrelationHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        -self.max_tau + (i as f64 + 0.5) * self.bin_width
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.n_bins()).map(|i| -self.max_tau + i as f64 * self.bin_width).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts divided by the accidental level, so that uncorrelated pairs give 1.
    pub fn normalized(&self) -> Vec<f64> {
        self.counts
            .iter()
            .zip(&self.accidental)
            .map(|(&c, &a)| if a > 0.0 { c as f64 / a } else { 0.0 })
            .collect()
    }

    fn window_sum(&self, center: f64, half_width: f64, values: impl Fn(usize) -> f64) -> f64 {
        (0..self.n_bins())
            .filter(|&i| (self.bin_center(i) - center).abs() < half_width)
            .map(values)
            .sum()
    }

    /// Raw counts, and accidental expectation, within `half_width` of `center`.
    pub fn area(&self, center: f64, half_width: f64) -> (f64, f64) {
        (
            self.window_sum(center, half_width, |i| self.counts[i] as f64),
            self.window_sum(center, half_width, |i| self.accidental[i]),
        )
    }

    /// Replaces the accidental level, which by default treats every click as
    /// uncorrelated, with the level from uniform background clicks at `rates`
    /// (per detector, per live second): background pairs with every click of
    /// the other detector, counted once.
    pub fn with_background(mut self, rates: (f64, f64)) -> Self {
        let live = self.mask.live_fraction();
        let (n1, n2) = (self.singles.0 as f64, self.singles.1 as f64);
        let (r1, r2) = rates;
        let base = if live > 0.0 {
            (n1 * r2 + n2 * r1 - r1 * r2 * self.duration * live).max(0.0) * self.bin_width / live
        } else {
            0.0
        };
        self.accidental = (0..self.n_bins()).map(|i| base * self.mask.live_overlap(self.bin_center(i))).collect();
        self
    }

    /// Adds another histogram with identical binning.
    pub fn merge(&mut self, other: &CorrelationHistogram) -> Result<()> {
        if other.counts.len() != self.counts.len() || other.bin_width != self.bin_width {
            return Err(Error::GridMismatch("histograms have different binning".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.accidental.iter_mut().zip(&other.accidental) {
            *a += b;
        }
        self.singles.0 += other.singles.0;
        self.singles.1 += other.singles.1;
        self.duration += other.duration;
        Ok(())
    }
}

fn check_sorted(t: &[f64]) -> Result<()> {
    match t.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::UnsortedStream(i + 1)),
        None => Ok(()),
    }
}

/// Histogram of all pairwise `t1 - t2` within `max_tau` after dropping masked
/// clicks from both streams. `duration` is the observation time used for
/// the accidental level `n1 n2 / T^2 * T * bin * overlap(tau) / live^2`.
pub fn cross_correlate(
    d1: &[f64],
    d2: &[f64],
    bin_width: f64,
    max_tau: f64,
    mask: &PeriodicMask,
    duration: f64,
) -> Result<CorrelationHistogram> {
    check_sorted(d1)?;
    check_sorted(d2)?;
    if !(bin_width > 0.0 && max_tau > 0.0) {
        return Err(Error::param("bin_width", "bin width and range must be positive"));
    }
    let a = mask.apply(d1);
    let b = mask.apply(d2);
    let n_bins = (2.0 * max_tau / bin_width).round() as usize;
    let max_tau = 0.5 * n_bins as f64 * bin_width;
    let mut counts = vec![0u64; n_bins];
    let mut lo = 0usize;
    for &t1 in &a {
        while lo < b.len() && b[lo] <= t1 - max_tau {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] < t1 + max_tau {
            let tau = t1 - b[j];
            let k = ((tau + max_tau) / bin_width).floor() as isize;
            if (0..n_bins as isize).contains(&k) {
                counts[k as usize] += 1;
            }
            j += 1;
        }
    }
    let live = mask.live_fraction();
    let base = if duration > 0.0 && live > 0.0 {
        a.len() as f64 * b.len() as f64 / (duration * live * live) * bin_width
    } else {
        0.0
    };
    let accidental = (0..n_bins)
        .map(|i| base * mask.live_overlap(-max_tau + (i as f64 + 0.5) * bin_width))
        .collect();
    Ok(CorrelationHistogram {
        bin_width,
        max_tau,
        counts,
        mask: mask.clone(),
        accidental,
        singles: (a.len(), b.len()),
        duration,
    })
}

/// Peak areas of a pulsed correlation at `tau = k * period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakAreas {
    pub period: f64,
    pub half_width: f64,
    /// `(k, raw area, accidental area)` for `k = -K..=K`.
    pub peaks: Vec<(i64, f64, f64)>,
}

impl PeakAreas {
    pub fn get(&self, k: i64) -> Option<(f64, f64)> {
        self.peaks.iter().find(|p| p.0 == k).map(|p| (p.1, p.2))
    }

    /// Area above the accidental level.
    pub fn excess(&self, k: i64) -> Option<f64> {
        self.get(k).map(|(a, b)| a - b)
    }
}

pub fn peak_areas(hist: &CorrelationHistogram, period: f64, half_width: f64) -> PeakAreas {
    let k_max = ((hist.max_tau - half_width) / period).floor() as i64;
    let peaks = (-k_max..=k_max)
        .map(|k| {
            let (raw, acc) = hist.area(k as f64 * period, half_width);
            (k, raw, acc)
        })
        .collect();
    PeakAreas { period, half_width, peaks }
}

/// Ratio of the central peak to the mean of the four nearest side peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralPeakRatio {
    /// Raw areas.
    pub raw: f64,
    pub raw_error: f64,
    /// Areas above the accidental level; absent when the side peaks carry no
    /// significant excess.
    pub excess: Option<f64>,
    pub excess_error: Option<f64>,
    pub side_mean: f64,
    pub side_excess: f64,
}

pub fn central_peak_ratio(peaks: &PeakAreas) -> Result<CentralPeakRatio> {
    let side: Vec<(f64, f64)> = [-2, -1, 1, 2].iter().filter_map(|&k| peaks.get(k)).collect();
    let (c_raw, c_acc) = peaks.get(0).ok_or_else(|| Error::InsufficientStatistics("no central peak in range".into()))?;
    if side.len() < 4 {
        return Err(Error::InsufficientStatistics("need peaks at k = +-1, +-2".into()));
    }
    let side_raw = side.iter().map(|s| s.0).sum::<f64>() / 4.0;
    let side_excess = side.iter().map(|s| s.0 - s.1).sum::<f64>() / 4.0;
    if side_raw <= 0.0 {
        return Err(Error::InsufficientStatistics("no coincidences in the side peaks".into()));
    }
    // significant only if the side excess is well above its own Poisson noise
    let excess_ok = side_excess > 3.0 * (side_raw / 4.0).sqrt();
    let excess = excess_ok.then(|| (c_raw - c_acc) / side_excess);
    let excess_error = excess_ok.then(|| c_raw.max(1.0).sqrt() / side_excess);
    Ok(CentralPeakRatio {
        raw: c_raw / side_raw,
        raw_error: c_raw.max(1.0).sqrt() / side_raw,
        excess,
        excess_error,
        side_mean: side_raw,
        side_excess,
    })
}

/// Gaussian fit `A exp(-tau^2 / tau_env^2)` to the excess side-peak areas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub amplitude: f64,
    pub tau_env: f64,
    pub tau_env_error: f64,
    /// `sqrt(2) tau_env`: the 1/e full width of a Gaussian emission profile
    /// whose autocorrelation has width `tau_env`.
    pub transit_duration: f64,
    pub transit_duration_error: f64,
}

/// Fits the decay of the side peaks `k >= 1`, averaging `+k` and `-k`.
pub fn fit_peak_envelope(peaks: &PeakAreas) -> Result<EnvelopeFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut s = Vec::new();
    let k_max = peaks.peaks.iter().map(|p| p.0).max().unwrap_or(0);
    for k in 1..=k_max {
        let (Some((rp, ap)), Some((rm, am))) = (peaks.get(k), peaks.get(-k)) else { continue };
        x.push(k as f64 * peaks.period);
        y.push(0.5 * ((rp - ap) + (rm - am)));
        s.push(0.5 * (rp + rm).max(1.0).sqrt());
    }
    if x.len() < 3 {
        return Err(Error::InsufficientStatistics("need at least three side peaks".into()));
    }
    let a0 = y[0].max(1.0);
    let half = y.iter().position(|&v| v < 0.5 * a0).unwrap_or(x.len() - 1);
    let t0 = (x[half] / 0.83).max(peaks.period);
    let model = |p: &[f64], t: f64| p[0] * (-(t / p[1]).powi(2)).exp();
    let fit = crate::analysis::fit::weighted_fit(&model, &x, &y, &s, &[a0, t0])?;
    let tau = fit.params[1].abs();
    Ok(EnvelopeFit {
        amplitude: fit.params[0],
        tau_env: tau,
        tau_env_error: fit.errors[1],
        transit_duration: std::f64::consts::SQRT_2 * tau,
        transit_duration_error: std::f64::consts::SQRT_2 * fit.errors[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_simple_differences() {
        let a = [1.0, 2.0, 3.0];
        let b = [1.1, 2.5];
        let h = cross_correlate(&a, &b, 0.2, 1.0, &PeriodicMask::none(1.0), 3.0).unwrap();
        // pairs within 1: 1-1.1=-0.1, 2-1.1=0.9, 2-2.5=-0.5, 3-2.5=0.5
        assert_eq!(h.total(), 4);
        assert!(cross_correlate(&[2.0, 1.0], &b, 0.2, 1.0, &PeriodicMask::none(1.0), 3.0).is_err());
    }

    #[test]
    fn mask_overlap_of_half_period_window() {
        let m = PeriodicMask { period: 1.0, windows: vec![(0.4, 0.9)] };
        assert!((m.live_fraction() - 0.5).abs() < 1e-12);
        assert!((m.live_overlap(0.0) - 0.5).abs() < 1e-3);
        assert!((m.live_overlap(0.5) - 0.0).abs() < 1e-3);
        assert!((m.live_overlap(1.0) - 0.5).abs() < 1e-3);
    }
}
