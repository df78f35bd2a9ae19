mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use spsource::analysis::{
    calibrate_sigma_delta, central_peak_ratio, cross_correlate, dephasing_visibility, fit_emission_probability,
    fit_peak_envelope, hom_visibility, peak_areas, recover_shape, select_transits, shape_chi2, sin4_bins,
    CorrelationHistogram, PeriodicMask, TransitSelection,
};
use spsource::photostream::{seconds_to_ps, ClickRecord, Detector, EfficiencyChain, PulseSchedule};
use spsource::Error;

use common::{sample_sin4, within_sigma};

fn poisson_times(rate: f64, duration: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let exp = Exp::new(rate).unwrap();
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t >= duration {
            return out;
        }
        out.push(t);
    }
}

fn record(t: f64, detector: Detector, s: &PulseSchedule) -> ClickRecord {
    let pos = s.locate(t);
    ClickRecord {
        t_ps: seconds_to_ps(t),
        detector,
        pulse_index: pos.pulse,
        shot_index: pos.shot,
        in_repump_window: s.in_repump(pos.phase),
    }
}

/// Clicks from pulses that each fire with `p(shot, pulse)`, at sin^4 times,
/// on a random detector. Sorted.
fn pulsed_clicks(s: &PulseSchedule, shots: u32, p: impl Fn(u32, u32) -> f64, rng: &mut ChaCha8Rng) -> Vec<ClickRecord> {
    let mut out = Vec::new();
    for shot in 0..shots {
        for k in 0..s.pulses_per_shot {
            if rng.random::<f64>() < p(shot, k) {
                let t = s.drive_start_time(shot, k) + sample_sin4(s.drive_duration, rng);
                let d = if rng.random::<bool>() { Detector::D1 } else { Detector::D2 };
                out.push(record(t, d, s));
            }
        }
    }
    out.sort_by_key(|r| (r.t_ps, r.detector));
    out
}

fn split(records: &[ClickRecord]) -> (Vec<f64>, Vec<f64>) {
    let pick = |d| records.iter().filter(|r| r.detector == d).map(|r| r.t()).collect();
    (pick(Detector::D1), pick(Detector::D2))
}

#[test]
fn uncorrelated_streams_give_a_flat_histogram() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let duration = 10.0;
    let a = poisson_times(2e3, duration, &mut rng);
    let b = poisson_times(2e3, duration, &mut rng);
    let h = cross_correlate(&a, &b, 10e-6, 2e-3, &PeriodicMask::none(1e-6), duration).unwrap();
    // expected level r1 r2 T bin = 400 per bin
    let level = a.len() as f64 * b.len() as f64 / duration * 10e-6;
    assert!(h.accidental.iter().all(|x| (x - level).abs() < 1e-9 * level));
    let chi2: f64 = h.counts.iter().zip(&h.accidental).map(|(&c, &e)| (c as f64 - e).powi(2) / e).sum();
    let dof = h.n_bins() as f64;
    assert!(within_sigma(chi2, dof, 2.0 * dof, 4.0), "chi2 = {chi2} over {dof} bins");
    let mean: f64 = h.normalized().iter().sum::<f64>() / dof;
    assert!((mean - 1.0).abs() < 3.0 / (level * dof).sqrt());
}

#[test]
fn masked_poisson_histogram_follows_the_live_overlap() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let duration = 2.0;
    let mask = PeriodicMask { period: 1e-6, windows: vec![(400e-9, 900e-9)] };
    let a = poisson_times(4e4, duration, &mut rng);
    let b = poisson_times(4e4, duration, &mut rng);
    let h = cross_correlate(&a, &b, 100e-9, 3e-6, &mask, duration).unwrap();
    // the background form with all clicks as background is the same level
    let rates = (h.singles.0 as f64 / (duration * 0.5), h.singles.1 as f64 / (duration * 0.5));
    let hb = h.clone().with_background(rates);
    assert!(h.accidental.iter().zip(&hb.accidental).all(|(x, y)| (x - y).abs() <= 1e-9 * x.max(1.0)));
    let chi2: f64 = h
        .counts
        .iter()
        .zip(&h.accidental)
        .filter(|(_, &e)| e > 20.0)
        .map(|(&c, &e)| (c as f64 - e).powi(2) / e)
        .sum();
    let dof = h.accidental.iter().filter(|&&e| e > 20.0).count() as f64;
    assert!(within_sigma(chi2, dof, 2.0 * dof, 4.0), "chi2 = {chi2} over {dof} bins");
}

#[test]
fn ideal_single_photons_have_no_central_peak() {
    let s = PulseSchedule { pulses_per_shot: 5000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records = pulsed_clicks(&s, 20, |_, _| 0.2, &mut rng);
    let (d1, d2) = split(&records);
    let mask = PeriodicMask::repump(&s);
    let h = cross_correlate(&d1, &d2, 10e-9, 5e-6, &mask, 20.0 * s.shot_duration()).unwrap();
    // treating every click as uncorrelated background leaves nothing significant
    let r = central_peak_ratio(&peak_areas(&h, s.period, s.drive_duration)).unwrap();
    assert_eq!(r.raw, 0.0);
    assert!(r.side_mean > 100.0);
    assert!(r.side_excess.abs() < 4.0 * r.side_mean.sqrt());
    let peaks = peak_areas(&h.with_background((0.0, 0.0)), s.period, s.drive_duration);
    let r = central_peak_ratio(&peaks).unwrap();
    assert_eq!(r.excess, Some(0.0));
    assert_eq!(r.side_excess, r.side_mean);
}

#[test]
fn side_peak_envelope_recovers_transit_width() {
    // Gaussian emission profile with 1/e full width 2 * width
    let s = PulseSchedule { pulses_per_shot: 2000, ..Default::default() };
    let width = 100e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = |_: u32, k: u32| {
        let t = k as f64 * s.period - 1e-3;
        0.5 * (-(t / width).powi(2)).exp()
    };
    let records = pulsed_clicks(&s, 400, p, &mut rng);
    let (d1, d2) = split(&records);
    let h = cross_correlate(&d1, &d2, 10e-9, 500e-6, &PeriodicMask::repump(&s), 400.0 * s.shot_duration())
        .unwrap()
        .with_background((0.0, 0.0));
    let fit = fit_peak_envelope(&peak_areas(&h, s.period, 0.5 * s.period)).unwrap();
    let expected = 2.0 * width;
    assert!(
        (fit.transit_duration - expected).abs() < 4.0 * fit.transit_duration_error.max(0.02 * expected),
        "{} +- {}",
        fit.transit_duration,
        fit.transit_duration_error
    );
}

#[test]
fn too_few_side_peaks_is_insufficient_statistics() {
    let h = cross_correlate(&[1.0], &[1.0], 10e-9, 1.5e-6, &PeriodicMask::none(1e-6), 2.0).unwrap();
    let err = fit_peak_envelope(&peak_areas(&h, 1e-6, 0.5e-6));
    assert!(matches!(err, Err(Error::InsufficientStatistics(_))));
}

#[test]
fn empty_selection_is_empty() {
    let s = PulseSchedule::default();
    let sel = select_transits(&[], &TransitSelection::default(), &s);
    assert!(sel.bins.is_empty() && sel.transits.is_empty() && sel.clicks.is_empty());
}

#[test]
fn selection_keeps_bursts_and_joins_adjacent_bins() {
    let s = PulseSchedule::default();
    // bursts of 8 clicks in bins 3 and 4 of shot 0, sparse clicks elsewhere
    let burst = |k: u32| (0..8).map(move |i| (k * 100 + 10 * i) as f64 * s.period + 100e-9);
    let mut times: Vec<f64> = burst(3).chain(burst(4)).collect();
    times.extend((0..20).map(|i| (i * 997) as f64 * s.period + 100e-9));
    times.sort_by(f64::total_cmp);
    times.dedup();
    let records: Vec<ClickRecord> = times.iter().map(|&t| record(t, Detector::D1, &s)).collect();
    let sel = select_transits(&records, &TransitSelection { bin_width: 100e-6, threshold_counts: 5 }, &s);
    assert_eq!(sel.bins.len(), 2);
    assert_eq!(sel.transits.len(), 1);
    assert!((sel.transits[0].0 - 300e-6).abs() < 1e-12 && (sel.transits[0].1 - 500e-6).abs() < 1e-12);
    let strict = select_transits(&records, &TransitSelection { bin_width: 100e-6, threshold_counts: 9 }, &s);
    assert!(strict.bins.is_empty());
}

#[test]
fn sin4_clicks_pass_and_flat_clicks_fail_the_shape_test() {
    let s = PulseSchedule { pulses_per_shot: 20_000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let good = pulsed_clicks(&s, 2, |_, _| 0.5, &mut rng);
    let model = sin4_bins(35);
    let t = shape_chi2(&recover_shape(&good, &s, 35), &model).unwrap();
    assert!(t.p_value > 0.01, "{t:?}");
    let flat: Vec<ClickRecord> = (0..20_000u32)
        .map(|k| record(k as f64 * s.period + rng.random::<f64>() * s.drive_duration, Detector::D1, &s))
        .collect();
    let t = shape_chi2(&recover_shape(&flat, &s, 35), &model).unwrap();
    assert!(t.p_value < 1e-6, "{t:?}");
}

#[test]
fn shape_background_comes_from_the_idle_gap() {
    let s = PulseSchedule { pulses_per_shot: 100_000, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut times = poisson_times(2e5, s.shot_duration(), &mut rng);
    times.retain(|&t| !s.in_repump(s.locate(t).phase));
    let records: Vec<ClickRecord> = times.iter().map(|&t| record(t, Detector::D2, &s)).collect();
    let h = recover_shape(&records, &s, 35);
    // 2e5 /s over 0.1 s spread over 350 ns bins of 10 ns
    let expected = 2e5 * s.shot_duration() * h.bin_width / s.period;
    let gap = s.period - s.drive_duration - s.repump_duration;
    let var = expected * (h.bin_width / gap);
    assert!(within_sigma(h.background_per_bin, expected, var, 4.0), "{} vs {expected}", h.background_per_bin);
}

#[test]
fn flat_conditional_probability_extrapolates_to_itself() {
    let s = PulseSchedule { pulses_per_shot: 20_000, ..Default::default() };
    let chain = EfficiencyChain { dark_rate_hz: 0.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = 0.66 * chain.product();
    let records = pulsed_clicks(&s, 5, |_, _| p, &mut rng);
    let fit = fit_emission_probability(&records, &s, 10, &chain).unwrap();
    assert!(fit.gaussian_fit.2 > 50.0);
    assert!((fit.p_max_raw - p).abs() < 3.0 * fit.p_max_raw_error, "{} +- {}", fit.p_max_raw, fit.p_max_raw_error);
    assert!((fit.p_max_corrected - 0.66).abs() < 3.0 * fit.p_max_corrected_error);
    assert!(!fit.low_confidence);
}

#[test]
fn gaussian_conditional_probability_is_extrapolated_to_zero_lag() {
    // coupling drifts within 8 pulses: P(k) = p0 exp(-k^2 / 2 w^2) inside short bursts
    let s = PulseSchedule { pulses_per_shot: 20_000, ..Default::default() };
    let chain = EfficiencyChain { dark_rate_hz: 0.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let shots = 40;
    let bursts: Vec<Vec<u32>> = (0..shots).map(|_| (0..40).map(|_| rng.random_range(100..19_900)).collect()).collect();
    let w = 4.0;
    let p = |shot: u32, k: u32| {
        bursts[shot as usize]
            .iter()
            .map(|&c| 0.9 * (-((k as f64 - c as f64) / w).powi(2) / 2.0).exp())
            .fold(0.0, f64::max)
    };
    let records = pulsed_clicks(&s, shots, p, &mut rng);
    let fit = fit_emission_probability(&records, &s, 10, &chain).unwrap();
    let first = fit.conditional_probs[0].p;
    // the fit extrapolates above the first measured lag
    assert!(fit.p_max_raw > first, "{} vs k=1 {}", fit.p_max_raw, first);
    assert!(fit.gaussian_fit.2.is_finite() && fit.gaussian_fit.2 > 2.0);
}

#[test]
fn emission_fit_rejects_short_windows() {
    let s = PulseSchedule::default();
    assert!(fit_emission_probability(&[], &s, 3, &EfficiencyChain::default()).is_err());
}

#[test]
fn emission_fit_closes_within_two_sigma_in_most_seeds() {
    let s = PulseSchedule { pulses_per_shot: 20_000, ..Default::default() };
    let chain = EfficiencyChain::default();
    let p = 0.66 * chain.product();
    let background = 1.0 - (-2.0 * chain.dark_rate_hz * s.drive_duration).exp();
    let mut covered = 0;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let records = pulsed_clicks(&s, 2, |_, _| p + background, &mut rng);
        let fit = fit_emission_probability(&records, &s, 10, &chain).unwrap();
        if (fit.p_max_raw - p).abs() < 2.0 * fit.p_max_raw_error {
            covered += 1;
        }
    }
    assert!(covered >= 18, "{covered} of 20");
}

fn flat_histogram(levels: &[u64], bin: f64) -> CorrelationHistogram {
    let n = levels.len();
    CorrelationHistogram {
        bin_width: bin,
        max_tau: 0.5 * n as f64 * bin,
        counts: levels.to_vec(),
        mask: PeriodicMask::none(1e-6),
        accidental: vec![0.0; n],
        singles: (0, 0),
        duration: 1.0,
    }
}

#[test]
fn visibility_limits() {
    let bin = 10e-9;
    let perp = flat_histogram(&[100; 100], bin);
    let v = hom_visibility(&perp, &perp, 300e-9).unwrap();
    assert!(v.visibility.abs() < 1e-12);
    let v = hom_visibility(&flat_histogram(&[0; 100], bin), &perp, 300e-9).unwrap();
    assert_eq!(v.visibility, 1.0);
    let err = hom_visibility(&perp, &flat_histogram(&[0; 100], bin), 300e-9);
    assert!(matches!(err, Err(Error::InsufficientStatistics(_))));
    assert!(hom_visibility(&perp, &flat_histogram(&[100; 50], bin), 300e-9).is_err());
}

#[test]
fn dip_fit_recovers_the_coherence_time() {
    let bin = 10e-9;
    let t_c = 300e-9;
    let perp = flat_histogram(&[10_000; 300], bin);
    let par_counts: Vec<u64> = (0..300)
        .map(|i| {
            let tau = perp.bin_center(i);
            (10_000.0 * (1.0 - 0.9 * (-(tau / t_c).powi(2)).exp())).round() as u64
        })
        .collect();
    let v = hom_visibility(&flat_histogram(&par_counts, bin), &perp, 1.4e-6).unwrap();
    let t = v.coherence_time.unwrap();
    assert!((t - t_c).abs() < 0.01 * t_c, "{t}");
    assert!((v.dip_depth.unwrap() - 0.9).abs() < 0.01);
}

#[test]
fn dephasing_visibility_matches_gaussian_closed_form() {
    // I ~ exp(-t^2 / 2 w^2): V = 1 / sqrt(1 + 2 sigma^2 w^2)
    let (w, dt) = (50e-9, 1e-9);
    let intensity: Vec<f64> = (0..1000).map(|i| (-((i as f64 * dt - 500e-9) / w).powi(2) / 2.0).exp()).collect();
    for sigma in [0.0, 1.0 / w, 3.0 / w] {
        let v = dephasing_visibility(&intensity, dt, sigma, 900e-9);
        let exact = 1.0 / (1.0 + 2.0 * (sigma * w).powi(2)).sqrt();
        assert!((v - exact).abs() < 2e-3, "sigma {sigma}: {v} vs {exact}");
    }
    let sigma = calibrate_sigma_delta(&intensity, dt, 0.8, 900e-9).unwrap();
    assert!((dephasing_visibility(&intensity, dt, sigma, 900e-9) - 0.8).abs() < 1e-4);
}

fn window_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..0.9, 0.01f64..0.1), 0..3)
        .prop_map(|w| w.into_iter().map(|(a, d)| (a * 1e-6, (a + d) * 1e-6)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn swapping_detectors_mirrors_the_histogram(seed in any::<u64>(), windows in window_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = poisson_times(1e5, 0.02, &mut rng);
        let b = poisson_times(1e5, 0.02, &mut rng);
        let mask = PeriodicMask { period: 1e-6, windows };
        let ab = cross_correlate(&a, &b, 20e-9, 2e-6, &mask, 0.02).unwrap();
        let ba = cross_correlate(&b, &a, 20e-9, 2e-6, &mask, 0.02).unwrap();
        let mut rev = ba.counts.clone();
        rev.reverse();
        let diff = ab.counts.iter().zip(&rev).filter(|(x, y)| x != y).count();
        // only exact bin-edge ties can differ
        prop_assert!(diff <= 1, "{} bins differ", diff);
        let n = ab.n_bins();
        for i in 0..n {
            prop_assert!((ab.accidental[i] - ab.accidental[n - 1 - i]).abs() <= 2e-3 * ab.accidental[i].max(1e-9));
        }
    }

    #[test]
    fn stricter_thresholds_select_subsets(seed in any::<u64>(), t in 1u32..10) {
        let s = PulseSchedule { pulses_per_shot: 5000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = pulsed_clicks(&s, 2, |_, k| if k % 1000 < 300 { 0.05 } else { 0.01 }, &mut rng);
        let loose = select_transits(&records, &TransitSelection { bin_width: 100e-6, threshold_counts: t }, &s);
        let strict = select_transits(&records, &TransitSelection { bin_width: 100e-6, threshold_counts: t + 1 }, &s);
        prop_assert!(strict.bins.iter().all(|b| loose.bins.contains(b)));
        prop_assert!(strict.clicks.len() <= loose.clicks.len());
        prop_assert!(loose.bins.iter().all(|b| b.counts > t));
    }

    #[test]
    fn conditional_probabilities_are_probabilities(seed in any::<u64>(), p in 0.0f64..0.5) {
        let s = PulseSchedule { pulses_per_shot: 2000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = pulsed_clicks(&s, 2, |_, _| p, &mut rng);
        if let Ok(fit) = fit_emission_probability(&records, &s, 10, &EfficiencyChain::default()) {
            prop_assert!(fit.conditional_probs.iter().all(|c| (0.0..=1.0).contains(&c.p)));
            prop_assert_eq!(fit.conditional_probs.len(), 10);
        }
    }
}
