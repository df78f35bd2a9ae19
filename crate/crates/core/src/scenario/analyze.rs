use serde::Serialize;

use super::config::ScenarioConfig;
use crate::analysis::{
    central_peak_ratio, cross_correlate, fit_emission_probability, fit_peak_envelope, hom_visibility, peak_areas,
    recover_shape, select_transits, shape_chi2, CentralPeakRatio, ChiSquareTest, CorrelationHistogram, EmissionFit,
    EnvelopeFit, HomVisibility, PeakAreas, PeriodicMask, ShapeHistogram, SummaryRecord, TransitSelection,
};
use crate::error::{Error, Result};
use crate::photostream::{detector_times, ClickRecord, Detector, PulseSchedule};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Serialize)]
pub struct G2Analysis {
    pub histogram: CorrelationHistogram,
    pub peaks: PeakAreas,
    pub central: Option<CentralPeakRatio>,
    pub envelope: Option<EnvelopeFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeAnalysis {
    /// `None` for the unselected stream.
    pub threshold: Option<u32>,
    pub selected_bins: usize,
    pub histogram: ShapeHistogram,
    /// Expected relative weight of each bin for the requested shape.
    pub model: Vec<f64>,
    pub chi2: Option<ChiSquareTest>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomAnalysis {
    pub parallel: CorrelationHistogram,
    pub perpendicular: Option<CorrelationHistogram>,
    pub visibility: Option<HomVisibility>,
}

/// Every statistic computed from one run (or a parallel/perpendicular pair).
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisBundle {
    pub config_hash: String,
    pub n_clicks: usize,
    pub g2: Option<G2Analysis>,
    pub shapes: Vec<ShapeAnalysis>,
    pub emission_selected: Option<EmissionFit>,
    pub emission_unselected: Option<EmissionFit>,
    pub hom: Option<HomAnalysis>,
    /// Statistics that could not be computed, and why.
    pub skipped: Vec<String>,
}

/// Relative weight of the target intensity in each of `n_bins` equal bins of
/// the drive window.
pub fn target_bins(target: &TimeSeries, schedule: &PulseSchedule, n_bins: usize) -> Vec<f64> {
    let width = schedule.drive_duration / n_bins as f64;
    let mut bins = vec![0.0; n_bins];
    let v = target.values();
    // midpoint rule on the target grid is ample for 0.5 ns samples
    for i in 0..v.len().saturating_sub(1) {
        let t = target.t(i) - target.t0() + 0.5 * target.dt();
        let k = (t / width) as usize;
        if k < n_bins {
            bins[k] += 0.5 * (v[i] * v[i] + v[i + 1] * v[i + 1]) * target.dt();
        }
    }
    bins
}

fn keep<T>(what: &str, r: Result<T>, skipped: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::InsufficientStatistics(_) | Error::Fit(_))) => {
            skipped.push(format!("{what}: {e}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn g2_histogram(records: &[ClickRecord], config: &ScenarioConfig, bin: f64, max_tau: f64) -> Result<CorrelationHistogram> {
    let schedule = &config.schedule;
    let d1 = detector_times(records, Detector::D1);
    let d2 = detector_times(records, Detector::D2);
    let duration = config.run.n_shots as f64 * schedule.shot_duration();
    let hist = cross_correlate(&d1, &d2, bin, max_tau, &PeriodicMask::repump(schedule), duration)?;
    let rates = background_rates(records, schedule, config.run.n_shots)
        .unwrap_or((config.chain.dark_rate_hz, config.chain.dark_rate_hz));
    Ok(hist.with_background(rates))
}

/// Per-detector click rates in the idle part of the sequence (neither drive
/// nor repump), or `None` if the sequence has no idle time.
pub fn background_rates(records: &[ClickRecord], schedule: &PulseSchedule, n_shots: u64) -> Option<(f64, f64)> {
    let (d0, d1) = schedule.drive_window();
    let (r0, r1) = schedule.repump_window();
    let gap = schedule.period - (d1 - d0) - (r1 - r0);
    if gap < 1e-3 * schedule.period || n_shots == 0 {
        return None;
    }
    let mut counts = (0u64, 0u64);
    for r in records {
        let phase = schedule.locate(r.t()).phase;
        if !r.in_repump_window && !schedule.in_drive(phase) && !schedule.in_repump(phase) {
            match r.detector {
                Detector::D1 => counts.0 += 1,
                Detector::D2 => counts.1 += 1,
            }
        }
    }
    let idle = n_shots as f64 * schedule.pulses_per_shot as f64 * gap;
    Some((counts.0 as f64 / idle, counts.1 as f64 / idle))
}

/// Runs the full analysis suite. `perpendicular` is the second stream of a
/// HOM pair; `records` is then the parallel one.
pub fn analyze(
    config: &ScenarioConfig,
    target: &TimeSeries,
    records: &[ClickRecord],
    perpendicular: Option<&[ClickRecord]>,
) -> Result<AnalysisBundle> {
    config.validate()?;
    let a = &config.analysis;
    let schedule = &config.schedule;
    let mut skipped = Vec::new();

    let hist = g2_histogram(records, config, a.correlation_bin, a.max_tau)?;
    // photon pairs k pulses apart differ by k period +- drive_duration
    let half_width = schedule.drive_duration.min(0.5 * schedule.period);
    let peaks = peak_areas(&hist, schedule.period, half_width);
    let central = keep("g2 central peak", central_peak_ratio(&peaks), &mut skipped)?;
    let envelope = keep("g2 envelope", fit_peak_envelope(&peaks), &mut skipped)?;
    let g2 = Some(G2Analysis { histogram: hist, peaks, central, envelope });

    let model = target_bins(target, schedule, a.shape_bins);
    let mut shapes = Vec::new();
    let unselected = recover_shape(records, schedule, a.shape_bins);
    let chi2 = keep("shape (unselected)", shape_chi2(&unselected, &model), &mut skipped)?;
    shapes.push(ShapeAnalysis { threshold: None, selected_bins: 0, histogram: unselected, model: model.clone(), chi2 });
    for &threshold in &a.thresholds {
        let sel = TransitSelection { threshold_counts: threshold, ..a.selection };
        let picked = select_transits(records, &sel, schedule);
        let histogram = recover_shape(&picked.clicks, schedule, a.shape_bins);
        let chi2 = keep(&format!("shape (threshold {threshold})"), shape_chi2(&histogram, &model), &mut skipped)?;
        shapes.push(ShapeAnalysis {
            threshold: Some(threshold),
            selected_bins: picked.bins.len(),
            histogram,
            model: model.clone(),
            chi2,
        });
    }

    let selected = select_transits(records, &a.selection, schedule);
    let emission_selected = keep(
        "emission (selected)",
        fit_emission_probability(&selected.clicks, schedule, a.k_max, &config.chain),
        &mut skipped,
    )?;
    let emission_unselected = keep(
        "emission (unselected)",
        fit_emission_probability(records, schedule, a.k_max, &config.chain),
        &mut skipped,
    )?;

    let hom = match perpendicular {
        Some(perp) => {
            let par = g2_histogram(records, config, a.correlation_bin, a.hom_max_tau)?;
            let perp = g2_histogram(perp, config, a.correlation_bin, a.hom_max_tau)?;
            let visibility = keep("HOM visibility", hom_visibility(&par, &perp, 0.5 * schedule.period), &mut skipped)?;
            Some(HomAnalysis { parallel: par, perpendicular: Some(perp), visibility })
        }
        None if config.interferometer.kind == crate::photostream::InterferometerKind::Hom => {
            let par = g2_histogram(records, config, a.correlation_bin, a.hom_max_tau)?;
            skipped.push("HOM visibility: needs both polarizations".into());
            Some(HomAnalysis { parallel: par, perpendicular: None, visibility: None })
        }
        None => None,
    };

    Ok(AnalysisBundle {
        config_hash: config.hash(),
        n_clicks: records.len(),
        g2,
        shapes,
        emission_selected,
        emission_unselected,
        hom,
        skipped,
    })
}

impl AnalysisBundle {
    pub fn summary(&self) -> Vec<SummaryRecord> {
        let mut out = vec![SummaryRecord::new("clicks", self.n_clicks as f64, 0.0, self.n_clicks as u64)];
        if let Some(g2) = &self.g2 {
            let n = g2.histogram.total();
            if let Some(c) = &g2.central {
                if let (Some(v), Some(e)) = (c.excess, c.excess_error) {
                    out.push(SummaryRecord::new("g2_central_ratio", v, e, n));
                }
                out.push(SummaryRecord::new("g2_central_ratio_raw", c.raw, c.raw_error, n));
            }
            if let Some(e) = &g2.envelope {
                out.push(SummaryRecord::new("g2_envelope_tau", e.tau_env, e.tau_env_error, n));
                out.push(SummaryRecord::new("transit_duration", e.transit_duration, e.transit_duration_error, n));
            }
        }
        for s in &self.shapes {
            let name = match s.threshold {
                Some(t) => format!("shape_p_value_t{t}"),
                None => "shape_p_value_all".into(),
            };
            if let Some(c) = &s.chi2 {
                out.push(SummaryRecord::new(name, c.p_value, 0.0, c.n_events));
            }
        }
        for (name, fit) in [("selected", &self.emission_selected), ("unselected", &self.emission_unselected)] {
            if let Some(f) = fit {
                let n = f.conditioning_events as u64;
                out.push(SummaryRecord::new(format!("p_max_raw_{name}"), f.p_max_raw, f.p_max_raw_error, n));
                out.push(SummaryRecord::new(format!("p_max_corrected_{name}"), f.p_max_corrected, f.p_max_corrected_error, n));
            }
        }
        if let Some(v) = self.hom.as_ref().and_then(|h| h.visibility.as_ref()) {
            let n = (v.area_parallel + v.area_perpendicular) as u64;
            out.push(SummaryRecord::new("hom_visibility", v.visibility, v.visibility_error, n));
            if let (Some(t), Some(e)) = (v.coherence_time, v.coherence_time_error) {
                out.push(SummaryRecord::new("hom_coherence_time", t, e, n));
            }
        }
        out
    }
}
