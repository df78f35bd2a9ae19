use std::f64::consts::PI;

use crate::series::{PulseEnvelope, TimeSeries};

/// Time-domain standard deviation of a Gaussian low-pass whose amplitude
/// response `exp(-2 pi^2 sigma^2 f^2)` is 1/sqrt(2) at `cutoff_hz`.
pub fn gaussian_sigma(cutoff_hz: f64) -> f64 {
    (2.0_f64.ln()).sqrt() / (2.0 * PI * cutoff_hz)
}

/// Amplitude response of [`band_limit`] at frequency `f`.
pub fn gaussian_response(cutoff_hz: f64, f: f64) -> f64 {
    let s = gaussian_sigma(cutoff_hz);
    (-2.0 * PI * PI * s * s * f * f).exp()
}

/// Zero-phase Gaussian low-pass of a sampled envelope (AOM bandwidth model).
///
/// The envelope is taken to be zero outside its window; the output stays on
/// the input grid and is clamped at zero.
pub fn band_limit(envelope: &PulseEnvelope, cutoff_hz: f64) -> PulseEnvelope {
    let dt = envelope.dt();
    if !cutoff_hz.is_finite() || cutoff_hz <= 0.0 {
        return envelope.clone();
    }
    let sigma = gaussian_sigma(cutoff_hz);
    if sigma < 0.05 * dt {
        return envelope.clone();
    }
    let half = (5.0 * sigma / dt).ceil() as isize;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| (-0.5 * (k as f64 * dt / sigma).powi(2)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);

    let x = envelope.values();
    let n = x.len() as isize;
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (j, w) in kernel.iter().enumerate() {
                let src = i + j as isize - half;
                if (0..n).contains(&src) {
                    acc += w * x[src as usize];
                }
            }
            acc.max(0.0)
        })
        .collect();
    let series =
        TimeSeries::new(envelope.series.t0(), dt, out).expect("grid copied from a valid series");
    PulseEnvelope::new(envelope.kind, series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(n: usize, dt: f64, f: impl Fn(f64) -> f64) -> PulseEnvelope {
        PulseEnvelope::rabi_drive(TimeSeries::new(0.0, dt, (0..n).map(|i| f(i as f64 * dt)).collect()).unwrap())
    }

    #[test]
    fn infinite_cutoff_is_identity() {
        let e = env(100, 1e-9, |t| (t * 1e8).sin().abs());
        assert_eq!(band_limit(&e, f64::INFINITY), e);
        assert_eq!(band_limit(&e, 1e15), e);
    }

    #[test]
    fn one_megahertz_modulation_survives_five_megahertz_cutoff() {
        // analytic response: exp(-ln2/2 * (1/5)^2) = 0.9862
        let expected = gaussian_response(5e6, 1e6);
        assert!((expected - (-(2.0_f64.ln()) / 2.0 * 0.04).exp()).abs() < 1e-12);
        assert!(1.0 - expected < 0.10);

        let dt = 1e-9;
        let n = 20_001;
        let e = env(n, dt, |t| 1.0 + 0.5 * (2.0 * PI * 1e6 * t).sin());
        let f = band_limit(&e, 5e6);
        // measure the modulation amplitude away from the edges by projection
        let (lo, hi) = (5_000, 15_000);
        let mut s = 0.0;
        let mut c = 0.0;
        for i in lo..hi {
            let t = i as f64 * dt;
            let w = 2.0 * PI * 1e6 * t;
            s += (f.values()[i] - 1.0) * w.sin();
            c += w.sin() * w.sin();
        }
        let amp = s / c;
        assert!((amp / 0.5 - expected).abs() < 1e-3, "measured {}", amp / 0.5);
    }

    #[test]
    fn output_is_non_negative() {
        let e = env(500, 1e-9, |t| if (t * 1e7) as i64 % 2 == 0 { 1.0 } else { 0.0 });
        assert!(band_limit(&e, 5e6).values().iter().all(|v| *v >= 0.0));
    }
}
