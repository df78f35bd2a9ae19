use serde::{Deserialize, Serialize};

use super::correlate::CorrelationHistogram;
use super::fit::weighted_fit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomVisibility {
    pub visibility: f64,
    pub visibility_error: f64,
    /// Coherence time from `par / perp = 1 - A exp(-tau^2 / T^2)`, when the
    /// dip is deep enough to fit.
    pub coherence_time: Option<f64>,
    pub coherence_time_error: Option<f64>,
    pub dip_depth: Option<f64>,
    pub area_parallel: f64,
    pub area_perpendicular: f64,
}

/// `V = 1 - area_par / area_perp` over `|tau| < half_window`, and a fit of
/// the dip shape.
pub fn hom_visibility(par: &CorrelationHistogram, perp: &CorrelationHistogram, half_window: f64) -> Result<HomVisibility> {
    if par.counts.len() != perp.counts.len() || (par.bin_width - perp.bin_width).abs() > 1e-15 {
        return Err(Error::GridMismatch("parallel and perpendicular histograms differ in binning".into()));
    }
    let (a_par, _) = par.area(0.0, half_window);
    let (a_perp, _) = perp.area(0.0, half_window);
    if a_perp <= 0.0 {
        return Err(Error::InsufficientStatistics("perpendicular histogram has no coincidences in the central window".into()));
    }
    let ratio = a_par / a_perp;
    let visibility = 1.0 - ratio;
    let visibility_error = if a_par > 0.0 { ratio * (1.0 / a_par + 1.0 / a_perp).sqrt() } else { 1.0 / a_perp };

    let idx: Vec<usize> = (0..perp.counts.len())
        .filter(|&i| perp.bin_center(i).abs() < half_window && perp.counts[i] > 0)
        .collect();
    let x: Vec<f64> = idx.iter().map(|&i| perp.bin_center(i)).collect();
    let y: Vec<f64> = idx.iter().map(|&i| par.counts[i] as f64).collect();
    let base: Vec<f64> = idx.iter().map(|&i| perp.counts[i] as f64).collect();
    let lookup = |tau: f64| {
        let k = ((tau + perp.max_tau) / perp.bin_width).floor() as usize;
        perp.counts[k.min(perp.counts.len() - 1)] as f64
    };
    let model = |p: &[f64], tau: f64| lookup(tau) * (1.0 - p[0] * (-(tau / p[1]).powi(2)).exp());
    // Variance of par - perp * f with both Poisson.
    let depth0 = visibility.clamp(0.05, 1.0);
    let sigma: Vec<f64> = base
        .iter()
        .map(|&b| {
            let f: f64 = 1.0 - 0.5 * depth0;
            (b * f + b * f * f).max(1.0).sqrt()
        })
        .collect();
    let fit = if visibility > 3.0 * visibility_error && x.len() >= 4 {
        weighted_fit(&model, &x, &y, &sigma, &[1.0_f64.min(2.0 * depth0), 0.5 * half_window]).ok()
    } else {
        None
    };
    Ok(HomVisibility {
        visibility,
        visibility_error,
        coherence_time: fit.as_ref().map(|f| f.params[1].abs()),
        coherence_time_error: fit.as_ref().map(|f| f.errors[1]),
        dip_depth: fit.as_ref().map(|f| f.params[0]),
        area_parallel: a_par,
        area_perpendicular: a_perp,
    })
}

/// Visibility expected from pure Gaussian dephasing of identical photons
/// with intensity `intensity` (any normalisation, spacing `dt`):
/// `V = int Phi(tau) exp(-sigma^2 tau^2 / 2) / int Phi` over `|tau| < half_window`,
/// with `Phi` the intensity autocorrelation.
pub fn dephasing_visibility(intensity: &[f64], dt: f64, sigma_delta: f64, half_window: f64) -> f64 {
    let n = intensity.len();
    let (mut num, mut den) = (0.0, 0.0);
    for lag in -(n as isize - 1)..(n as isize) {
        let tau = lag as f64 * dt;
        if tau.abs() >= half_window {
            continue;
        }
        let phi: f64 = (0..n as isize)
            .filter_map(|i| {
                let j = i + lag;
                (0..n as isize).contains(&j).then(|| intensity[i as usize] * intensity[j as usize])
            })
            .sum();
        num += phi * (-0.5 * (sigma_delta * tau).powi(2)).exp();
        den += phi;
    }
    if den > 0.0 { num / den } else { 0.0 }
}

/// The dephasing spread that gives `target` visibility for identical
/// photons, by bisection on [`dephasing_visibility`].
pub fn calibrate_sigma_delta(intensity: &[f64], dt: f64, target: f64, half_window: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&target) {
        return Err(Error::param("target", format!("visibility must lie in [0, 1), got {target}")));
    }
    let v = |s: f64| dephasing_visibility(intensity, dt, s, half_window);
    let (mut lo, mut hi) = (0.0, 1.0 / dt);
    if v(hi) > target {
        return Err(Error::param("target", "visibility unreachable on this grid"));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if v(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
