#![allow(dead_code)]

use num_complex::Complex64;
use spsource::pulse::{catalog_shape, invert_target, InversionOptions, ShapeName, ShapeTarget, DEFAULT_TARGET_DT};
use spsource::qsim::LambdaSystemParams;
use spsource::series::{PulseEnvelope, TimeSeries};

pub const PULSE_DURATION: f64 = 350e-9;
pub const P_DESIGN: f64 = 0.66;

pub fn reference_params() -> LambdaSystemParams {
    LambdaSystemParams::default()
}

pub fn sin2_target(p: f64) -> ShapeTarget {
    catalog_shape(&ShapeName::Sin2, PULSE_DURATION, p, DEFAULT_TARGET_DT).unwrap()
}

pub fn design_drive(p: f64) -> (ShapeTarget, PulseEnvelope) {
    let params = reference_params();
    let target = sin2_target(p);
    let inv = invert_target(&params, &target, InversionOptions::default()).unwrap();
    assert!(inv.feasible, "P = {p} should be feasible");
    (target, inv.omega)
}

pub fn constant_coupling(drive: &PulseEnvelope, g: f64) -> TimeSeries {
    TimeSeries::constant(drive.series.t0(), drive.dt(), drive.len(), g).unwrap()
}

/// Explicit midpoint integration with linear interpolation of the drive,
/// written independently of the library integrator. Returns the photon
/// intensity `2 kappa |c_g|^2` on the drive grid.
pub fn midpoint_reference(p: &LambdaSystemParams, drive: &PulseEnvelope, g: f64, substeps: usize) -> Vec<f64> {
    let i = Complex64::i();
    let omega = drive.values();
    let h = drive.dt() / substeps as f64;
    let mut ce = Complex64::new(1.0, 0.0);
    let mut cx = Complex64::new(0.0, 0.0);
    let mut cg = Complex64::new(0.0, 0.0);
    let f = |o: f64, ce: Complex64, cx: Complex64, cg: Complex64| {
        (
            -i * 0.5 * o * cx,
            -i * 0.5 * o * ce - i * g * cg - p.gamma * cx,
            -i * g * cx - p.kappa * cg,
        )
    };
    let mut out = vec![0.0; omega.len()];
    for k in 0..omega.len() - 1 {
        for s in 0..substeps {
            let fr = (s as f64 + 0.5) / substeps as f64;
            let frs = s as f64 / substeps as f64;
            let o0 = omega[k] + (omega[k + 1] - omega[k]) * frs;
            let om = omega[k] + (omega[k + 1] - omega[k]) * fr;
            let (a, b, c) = f(o0, ce, cx, cg);
            let (a, b, c) = f(om, ce + a * (0.5 * h), cx + b * (0.5 * h), cg + c * (0.5 * h));
            ce += a * h;
            cx += b * h;
            cg += c * h;
        }
        out[k + 1] = 2.0 * p.kappa * cg.norm_sqr();
    }
    out
}

pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Two-sample Kolmogorov–Smirnov test; returns `(D, p)` from the asymptotic
/// distribution with the usual small-sample correction.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    let lambda = (ne + 0.12 + 0.11 / ne) * d;
    let mut q = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        q += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, q.clamp(0.0, 1.0))
}

/// Emission time within a `duration` window drawn from `sin^4(pi t / duration)`.
pub fn sample_sin4<R: rand::Rng>(duration: f64, rng: &mut R) -> f64 {
    loop {
        let t = rng.random::<f64>() * duration;
        if rng.random::<f64>() < (std::f64::consts::PI * t / duration).sin().powi(4) {
            return t;
        }
    }
}

/// `|x - mean| < k sqrt(var)`.
pub fn within_sigma(x: f64, mean: f64, var: f64, k: f64) -> bool {
    (x - mean).abs() < k * var.sqrt()
}
