use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::fit::weighted_fit;
use crate::error::{Error, Result};
use crate::photostream::{ClickRecord, EfficiencyChain, PulseSchedule};

/// Conditioning events below which a fit is flagged as low confidence.
pub const MIN_CONDITIONING_EVENTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProbability {
    pub k: u32,
    pub p: f64,
    pub error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionFit {
    pub conditional_probs: Vec<ConditionalProbability>,
    /// `(amplitude, center, width)` of `A exp(-(k - c)^2 / (2 w^2))`; the
    /// center is held at zero; the width is infinite for a flat sequence.
    pub gaussian_fit: (f64, f64, f64),
    /// Probability of a dark click in one drive window, subtracted before fitting.
    pub background: f64,
    pub p_max_raw: f64,
    pub p_max_raw_error: f64,
    pub p_max_corrected: f64,
    pub p_max_corrected_error: f64,
    pub conditioning_events: usize,
    pub low_confidence: bool,
}

/// `P(click in pulse n + k | click in pulse n)` for `k = 1..=k_max`, fitted
/// with a zero-centred Gaussian in `k` above the dark-click background and
/// extrapolated to `k = 0`. Only clicks inside drive windows count.
pub fn fit_emission_probability(
    records: &[ClickRecord],
    schedule: &PulseSchedule,
    k_max: u32,
    chain: &EfficiencyChain,
) -> Result<EmissionFit> {
    if k_max < 5 {
        return Err(Error::param("k_max", format!("need at least 5 successive pulses, got {k_max}")));
    }
    let pulses: HashSet<(u32, u32)> = records
        .iter()
        .filter(|r| !r.in_repump_window && schedule.in_drive(schedule.locate(r.t()).phase))
        .map(|r| (r.shot_index, r.pulse_index))
        .collect();
    let mut conditioning: Vec<(u32, u32)> = pulses.iter().copied().collect();
    conditioning.sort_unstable();

    let mut probs = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let mut trials = 0usize;
        let mut hits = 0usize;
        for &(shot, pulse) in &conditioning {
            if pulse + k >= schedule.pulses_per_shot {
                continue;
            }
            trials += 1;
            if pulses.contains(&(shot, pulse + k)) {
                hits += 1;
            }
        }
        let p = if trials > 0 { hits as f64 / trials as f64 } else { 0.0 };
        let error = if trials > 0 { (p.max(0.5 / trials as f64) * (1.0 - p) / trials as f64).sqrt() } else { 1.0 };
        probs.push(ConditionalProbability { k, p, error, trials });
    }

    let background = 1.0 - (-2.0 * chain.dark_rate_hz * schedule.drive_duration).exp();
    let x: Vec<f64> = probs.iter().map(|c| c.k as f64).collect();
    let y: Vec<f64> = probs.iter().map(|c| c.p - background).collect();
    let s: Vec<f64> = probs.iter().map(|c| c.error.max(1e-9)).collect();
    // Curvature q = 1 / (2 w^2) keeps a flat sequence (q = 0) regular.
    let model = |p: &[f64], k: f64| p[0] * (-p[1] * k * k).exp();
    let w0 = (k_max as f64 / 2.0).max(2.0);
    let fit = weighted_fit(&model, &x, &y, &s, &[y[0].max(1e-4), 0.5 / (w0 * w0)])?;
    let (a, a_err) = (fit.params[0], fit.errors[0]);
    let width = if fit.params[1] > 0.0 { (0.5 / fit.params[1]).sqrt() } else { f64::INFINITY };
    let product = chain.product();
    if product <= 0.0 {
        return Err(Error::param("chain", "efficiency product is zero"));
    }
    Ok(EmissionFit {
        conditional_probs: probs,
        gaussian_fit: (a, 0.0, width),
        background,
        p_max_raw: a,
        p_max_raw_error: a_err,
        p_max_corrected: a / product,
        p_max_corrected_error: a_err / product,
        conditioning_events: conditioning.len(),
        low_confidence: conditioning.len() < MIN_CONDITIONING_EVENTS,
    })
}
