//! Deterministic evolution of the single-excitation Λ system.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::params::LambdaSystemParams;
use crate::error::{Error, Result};
use crate::series::{cubic_at, EnvelopeKind, PulseEnvelope, TimeSeries};

/// Allowed drift of the probability bookkeeping over one pulse.
pub const NORM_TOLERANCE: f64 = 1e-6;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Amplitudes of |e,0>, |x,0>, |g,1> plus the probability that has leaked
/// out through the cavity and the atomic channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    pub c_e: Complex64,
    pub c_x: Complex64,
    pub c_g: Complex64,
    pub t: f64,
    pub emitted_norm: f64,
    pub spont_norm: f64,
}

impl QuantumState {
    pub fn initial(t: f64) -> Self {
        Self {
            c_e: Complex64::new(1.0, 0.0),
            c_x: Complex64::new(0.0, 0.0),
            c_g: Complex64::new(0.0, 0.0),
            t,
            emitted_norm: 0.0,
            spont_norm: 0.0,
        }
    }

    /// Squared norm of the (unnormalised) amplitude vector.
    pub fn amplitude_norm(&self) -> f64 {
        self.c_e.norm_sqr() + self.c_x.norm_sqr() + self.c_g.norm_sqr()
    }

    /// Total probability including what has leaked; 1 in exact arithmetic.
    pub fn total_probability(&self) -> f64 {
        self.amplitude_norm() + self.emitted_norm + self.spont_norm
    }
}

/// Full state history on the drive grid.
#[derive(Debug, Clone)]
pub struct StateHistory {
    pub states: Vec<QuantumState>,
    pub dt: f64,
    pub kappa: f64,
}

impl StateHistory {
    pub fn t0(&self) -> f64 {
        self.states[0].t
    }

    pub fn last(&self) -> &QuantumState {
        self.states.last().expect("history is never empty")
    }

    /// Photon amplitude `sqrt(2 kappa) c_g(t)`.
    pub fn photon_amplitude(&self) -> Vec<Complex64> {
        let s = (2.0 * self.kappa).sqrt();
        self.states.iter().map(|st| st.c_g * s).collect()
    }

    /// `|phi(t)|^2` on the grid.
    pub fn photon_intensity(&self) -> Vec<f64> {
        let s = 2.0 * self.kappa;
        self.states.iter().map(|st| st.c_g.norm_sqr() * s).collect()
    }

    /// Probability emitted through the cavity over the window.
    pub fn emission_probability(&self) -> f64 {
        self.last().emitted_norm
    }

    pub fn spontaneous_probability(&self) -> f64 {
        self.last().spont_norm
    }

    /// Largest `|c_x|^2` seen on the grid.
    pub fn max_excited_population(&self) -> f64 {
        self.states.iter().fold(0.0, |m, s| m.max(s.c_x.norm_sqr()))
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .fold(0.0, |m, s| m.max((s.total_probability() - 1.0).abs()))
    }
}

/// Default integration step: 1 / (200 max(g0, kappa, Omega_max) / 2 pi).
pub fn default_step(params: &LambdaSystemParams, omega_max: f64) -> f64 {
    let fastest = params.g0.max(params.kappa).max(omega_max.abs());
    2.0 * PI / (200.0 * fastest)
}

#[derive(Clone, Copy)]
struct Deriv {
    ce: Complex64,
    cx: Complex64,
    cg: Complex64,
    emitted: f64,
    spont: f64,
}

#[derive(Clone, Copy)]
struct Amps {
    ce: Complex64,
    cx: Complex64,
    cg: Complex64,
}

impl Amps {
    fn add(self, d: &Deriv, h: f64) -> Self {
        Self {
            ce: self.ce + d.ce * h,
            cx: self.cx + d.cx * h,
            cg: self.cg + d.cg * h,
        }
    }
}

fn rhs(p: &LambdaSystemParams, a: Amps, omega: f64, g: f64) -> Deriv {
    let half = 0.5 * omega;
    Deriv {
        ce: -I * half * a.cx,
        cx: -I * half * a.ce - I * g * a.cg - p.gamma * a.cx + I * p.delta_l * a.cx,
        cg: -I * g * a.cx - p.kappa * a.cg + I * (p.delta_l - p.delta_c) * a.cg,
        emitted: 2.0 * p.kappa * a.cg.norm_sqr(),
        spont: 2.0 * p.gamma * a.cx.norm_sqr(),
    }
}

/// Integrates the single-excitation equations
///
/// ```text
/// dc_e/dt = -i (Omega/2) c_x
/// dc_x/dt = -i (Omega/2) c_e - i g c_g - gamma c_x
/// dc_g/dt = -i g c_x - kappa c_g
/// ```
///
/// from |e,0> with classical RK4, carrying the two leak integrals
/// `int 2 kappa |c_g|^2` and `int 2 gamma |c_x|^2` as extra state so the
/// bookkeeping is integrated to the same order. Drive and coupling are
/// interpolated with cubic stencils between grid samples. `step` defaults to
/// [`default_step`] and is rounded down so it divides the grid spacing.
pub fn evolve_amplitudes(
    params: &LambdaSystemParams,
    drive: &PulseEnvelope,
    coupling: &TimeSeries,
    step: Option<f64>,
) -> Result<StateHistory> {
    if drive.kind != EnvelopeKind::RabiDrive {
        return Err(Error::param("drive", format!("expected a Rabi drive, got {:?}", drive.kind)));
    }
    if !drive.series.same_grid(coupling) {
        return Err(Error::GridMismatch(format!(
            "drive has {} samples from {:e} s every {:e} s; coupling has {} from {:e} every {:e}",
            drive.len(),
            drive.series.t0(),
            drive.dt(),
            coupling.len(),
            coupling.t0(),
            coupling.dt()
        )));
    }
    let h_req = step.unwrap_or_else(|| default_step(params, drive.max_abs()));
    if !(h_req > 0.0) {
        return Err(Error::param("step", format!("must be > 0, got {h_req}")));
    }
    let grid_dt = drive.dt();
    let n_sub = (grid_dt / h_req).ceil().max(1.0) as usize;
    let h = grid_dt / n_sub as f64;

    let omega = drive.values();
    let g = coupling.values();
    let t0 = drive.series.t0();

    let mut states = Vec::with_capacity(omega.len());
    let mut st = QuantumState::initial(t0);
    states.push(st);

    for i in 0..omega.len().saturating_sub(1) {
        for k in 0..n_sub {
            let f0 = k as f64 / n_sub as f64;
            let fm = (k as f64 + 0.5) / n_sub as f64;
            let f1 = (k as f64 + 1.0) / n_sub as f64;
            let (o0, om, o1) = (cubic_at(omega, i, f0), cubic_at(omega, i, fm), cubic_at(omega, i, f1));
            let (g0, gm, g1) = (cubic_at(g, i, f0), cubic_at(g, i, fm), cubic_at(g, i, f1));

            let a = Amps {
                ce: st.c_e,
                cx: st.c_x,
                cg: st.c_g,
            };
            let k1 = rhs(params, a, o0, g0);
            let k2 = rhs(params, a.add(&k1, 0.5 * h), om, gm);
            let k3 = rhs(params, a.add(&k2, 0.5 * h), om, gm);
            let k4 = rhs(params, a.add(&k3, h), o1, g1);
            let w = h / 6.0;
            st.c_e += (k1.ce + (k2.ce + k3.ce) * 2.0 + k4.ce) * w;
            st.c_x += (k1.cx + (k2.cx + k3.cx) * 2.0 + k4.cx) * w;
            st.c_g += (k1.cg + (k2.cg + k3.cg) * 2.0 + k4.cg) * w;
            st.emitted_norm += (k1.emitted + 2.0 * (k2.emitted + k3.emitted) + k4.emitted) * w;
            st.spont_norm += (k1.spont + 2.0 * (k2.spont + k3.spont) + k4.spont) * w;
        }
        st.t = t0 + (i + 1) as f64 * grid_dt;
        let drift = (st.total_probability() - 1.0).abs();
        if !(drift <= NORM_TOLERANCE) {
            return Err(Error::NormViolation { t: st.t, drift });
        }
        states.push(st);
    }

    Ok(StateHistory {
        states,
        dt: grid_dt,
        kappa: params.kappa,
    })
}
