mod common;

use common::*;
use proptest::prelude::*;
use spsource::pulse::*;
use spsource::qsim::{evolve_amplitudes, LambdaSystemParams};
use spsource::series::{EnvelopeKind, PulseEnvelope, TimeSeries};
use std::f64::consts::PI;

fn intensity(target: &ShapeTarget) -> Vec<f64> {
    target.amplitude().iter().map(|a| a * a).collect()
}

fn forward(params: &LambdaSystemParams, drive: &PulseEnvelope) -> Vec<f64> {
    evolve_amplitudes(params, drive, &constant_coupling(drive, params.g0), None)
        .unwrap()
        .photon_intensity()
}

#[test]
fn sin2_round_trip_reproduces_target_intensity() {
    let params = reference_params();
    let (target, drive) = design_drive(P_DESIGN);
    let err = relative_l2(&forward(&params, &drive), &intensity(&target));
    assert!(err < 1e-3, "relative L2 error {err}");
}

#[test]
fn band_limited_drive_degrades_shape_but_keeps_probability() {
    let params = reference_params();
    let (target, drive) = design_drive(P_DESIGN);
    let limited = band_limit(&drive, AOM_BANDWIDTH_HZ);
    let history = evolve_amplitudes(&params, &limited, &constant_coupling(&limited, params.g0), None).unwrap();
    let err = relative_l2(&history.photon_intensity(), &intensity(&target));
    assert!(err > 1e-3, "filter should visibly change the shape ({err})");
    let p = history.emission_probability();
    assert!(((p - P_DESIGN) / P_DESIGN).abs() < 0.05, "P = {p}");
}

#[test]
fn strong_targets_are_infeasible() {
    let params = reference_params();
    let inv = invert_target(&params, &sin2_target(0.9), InversionOptions::default()).unwrap();
    assert!(!inv.feasible);
    assert!(inv.c_e_floor < 1e-6);
    assert!(matches!(inv.into_drive(), Err(spsource::Error::Infeasible { .. })));

    let short = catalog_shape(&ShapeName::Sin2, 100e-9, 1.0, DEFAULT_TARGET_DT).unwrap();
    let inv = invert_target(&params, &short, InversionOptions::default()).unwrap();
    assert!(!inv.feasible);
    // The truncated drive cannot reach unit emission either.
    let p = evolve_amplitudes(&params, &inv.omega, &constant_coupling(&inv.omega, params.g0), None)
        .unwrap()
        .emission_probability();
    assert!(p < 0.9, "forward emission {p}");
}

#[test]
fn weak_targets_need_a_proportional_drive() {
    let params = reference_params();
    let a = invert_target(&params, &sin2_target(1e-4), InversionOptions::default()).unwrap();
    let b = invert_target(&params, &sin2_target(4e-4), InversionOptions::default()).unwrap();
    assert!(a.c_e_floor > 0.999);
    let ratio = b.omega.max_abs() / a.omega.max_abs();
    assert!((ratio - 2.0).abs() < 0.01, "ratio {ratio}");
}

#[test]
fn sin2_peak_follows_analytic_normalisation() {
    for (t, p) in [(350e-9, 0.66), (200e-9, 0.3), (1e-6, 1.0)] {
        let s = catalog_shape(&ShapeName::Sin2, t, p, DEFAULT_TARGET_DT).unwrap();
        let peak = s.amplitude().iter().cloned().fold(0.0, f64::max);
        let expected = (8.0 * p / (3.0 * t)).sqrt();
        assert!((peak - expected).abs() / expected < 1e-6);
        assert_eq!(s.amplitude()[0], 0.0);
        assert!(s.amplitude().last().unwrap().abs() < 1e-9 * expected);
    }
    assert!(catalog_shape(&ShapeName::Sin2, 350e-9, 0.0, DEFAULT_TARGET_DT).is_err());
    assert!("pyramid".parse::<ShapeName>().is_err());
    let bad = ShapeName::Custom(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.2)]);
    assert!(catalog_shape(&bad, 350e-9, 0.5, DEFAULT_TARGET_DT).is_err());
}

#[test]
fn tower_bridge_drive_loses_its_corners() {
    let params = reference_params();
    let target = catalog_shape(&ShapeName::TowerBridge, 800e-9, 0.5, DEFAULT_TARGET_DT).unwrap();
    let inv = invert_target(&params, &target, InversionOptions::default()).unwrap();
    assert!(inv.feasible, "floor {}", inv.c_e_floor);
    let smooth = band_limit(&inv.omega, AOM_BANDWIDTH_HZ);
    let curvature = |v: &[f64]| v.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).fold(0.0, f64::max);
    assert!(curvature(smooth.values()) < 0.5 * curvature(inv.omega.values()));
    let exact = relative_l2(&forward(&params, &inv.omega), &intensity(&target));
    let blurred = relative_l2(&forward(&params, &smooth), &intensity(&target));
    assert!(exact < 1e-2, "unfiltered error {exact}");
    assert!(blurred > 3.0 * exact, "filtered error {blurred} vs {exact}");
}

#[test]
fn one_megahertz_modulation_survives_the_filter() {
    let dt = 1e-9;
    let n = 20_001;
    let values = (0..n).map(|i| 1.0 + 0.5 * (2.0 * PI * 1e6 * i as f64 * dt).sin()).collect();
    let env = PulseEnvelope::rabi_drive(TimeSeries::new(0.0, dt, values).unwrap());
    let out = band_limit(&env, 5e6);
    let mid = &out.values()[5000..15000];
    let swing = 0.5 * (mid.iter().cloned().fold(f64::MIN, f64::max) - mid.iter().cloned().fold(f64::MAX, f64::min));
    assert!(swing / 0.5 > 0.9, "attenuation {swing}");
    assert!((swing / 0.5 - gaussian_response(5e6, 1e6)).abs() < 1e-3);
}

#[test]
fn filtering_smooth_envelopes_twice_is_nearly_idempotent() {
    // Gaussian filtering is not a projection; the second pass changes a
    // band-limited envelope by O((f / f_c)^2), negligible far below cutoff.
    let dt = 10e-9;
    let n = 40_001;
    let len = (n - 1) as f64 * dt;
    let values = (0..n).map(|i| (PI * i as f64 * dt / len).sin().powi(2)).collect();
    let env = PulseEnvelope::rabi_drive(TimeSeries::new(0.0, dt, values).unwrap());
    let once = band_limit(&env, AOM_BANDWIDTH_HZ);
    let twice = band_limit(&once, AOM_BANDWIDTH_HZ);
    let norm = |e: &PulseEnvelope| e.series.integral_sq();
    let change = ((norm(&twice) - norm(&once)) / norm(&once)).abs();
    assert!(change < 1e-6, "relative change {change}");
    let identity = band_limit(&env, f64::INFINITY);
    assert_eq!(identity.values(), env.values());
}

#[test]
fn shape_tables_parse_and_validate() {
    let table = tower_bridge_table().unwrap();
    assert!(table.len() > 100);
    assert_eq!(table[0].1, 0.0);
    assert_eq!(table.last().unwrap().1, 0.0);
    let parsed = parse_shape_table("# t a\n0 0\n0.5 1.0\n1 0\n").unwrap();
    assert_eq!(parsed, vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]);
    assert!(parse_shape_table("0 0\nx y\n").is_err());
    let custom = catalog_shape(&ShapeName::Custom(parsed), 300e-9, 0.4, DEFAULT_TARGET_DT).unwrap();
    assert_eq!(custom.envelope.kind, EnvelopeKind::TargetPhotonAmplitude);
    let p: f64 = custom.envelope.series.integral_sq();
    assert!((p - 0.4).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn feasibility_is_monotone_in_probability(p in 0.02f64..1.0, shrink in 0.05f64..1.0, dur_ns in 150.0f64..600.0) {
        let params = reference_params();
        let big = catalog_shape(&ShapeName::Sin2, dur_ns * 1e-9, p, DEFAULT_TARGET_DT).unwrap();
        let small = catalog_shape(&ShapeName::Sin2, dur_ns * 1e-9, p * shrink, DEFAULT_TARGET_DT).unwrap();
        let fb = invert_target(&params, &big, InversionOptions::default()).unwrap().feasible;
        let fs = invert_target(&params, &small, InversionOptions::default()).unwrap().feasible;
        prop_assert!(!fb || fs);
    }

    #[test]
    fn feasible_designs_round_trip(p in 0.05f64..0.7, dur_ns in 250.0f64..500.0) {
        let params = reference_params();
        let target = catalog_shape(&ShapeName::Sin2, dur_ns * 1e-9, p, DEFAULT_TARGET_DT).unwrap();
        let inv = invert_target(&params, &target, InversionOptions::default()).unwrap();
        prop_assume!(inv.feasible);
        let err = relative_l2(&forward(&params, &inv.omega), &intensity(&target));
        prop_assert!(err < 1e-3, "error {}", err);
    }

    #[test]
    fn band_limit_keeps_envelopes_non_negative(seed in 0u64..1000, cutoff in 1e6f64..50e6) {
        let vals: Vec<f64> = (0..400).map(|i| {
            let x = ((i as u64).wrapping_mul(6364136223846793005).wrapping_add(seed) >> 33) as f64;
            if i % 37 < 10 { 0.0 } else { x / (1u64 << 31) as f64 }
        }).collect();
        let env = PulseEnvelope::rabi_drive(TimeSeries::new(0.0, 1e-9, vals).unwrap());
        prop_assert!(band_limit(&env, cutoff).values().iter().all(|v| *v >= 0.0));
    }
}
