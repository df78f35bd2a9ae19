//! Precomputed emission statistics for a fixed drive over a range of
//! constant couplings.
//!
//! During a fountain transit the atom moves by a few nanometres over one
//! drive window, so the coupling is constant per pulse to good accuracy.
//! The table integrates the pulse once per coupling node and interpolates
//! linearly in `|g|` between nodes; the sign of `g` only flips the phase of
//! `c_g` and does not change any probability.

use rand::Rng;
use rayon::prelude::*;

use super::evolve::{evolve_amplitudes, StateHistory};
use super::params::LambdaSystemParams;
use super::trajectory::{locate_jump, Outcome};
use crate::error::Result;
use crate::series::{PulseEnvelope, TimeSeries};

#[derive(Debug, Clone)]
struct Node {
    norm: Vec<f64>,
    emitted: Vec<f64>,
    spont: Vec<f64>,
    /// Real photon amplitude (real in the Omega >= 0 gauge).
    phi: Vec<f64>,
}

impl Node {
    fn from_history(h: &StateHistory) -> Self {
        let s = (2.0 * h.kappa).sqrt();
        Self {
            norm: h.states.iter().map(|st| st.amplitude_norm()).collect(),
            emitted: h.states.iter().map(|st| st.emitted_norm).collect(),
            spont: h.states.iter().map(|st| st.spont_norm).collect(),
            phi: h.states.iter().map(|st| st.c_g.re * s).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmissionTable {
    g_max: f64,
    t0: f64,
    dt: f64,
    nodes: Vec<Node>,
}

impl EmissionTable {
    /// Integrates `drive` at `n_nodes` evenly spaced couplings in `[0, g_max]`.
    pub fn build(
        params: &LambdaSystemParams,
        drive: &PulseEnvelope,
        g_max: f64,
        n_nodes: usize,
    ) -> Result<Self> {
        let n_nodes = n_nodes.max(2);
        let s = &drive.series;
        let nodes = (0..n_nodes)
            .into_par_iter()
            .map(|j| {
                let g = g_max * j as f64 / (n_nodes - 1) as f64;
                let coupling = TimeSeries::constant(s.t0(), s.dt(), s.len(), g)?;
                evolve_amplitudes(params, drive, &coupling, None).map(|h| Node::from_history(&h))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            g_max,
            t0: s.t0(),
            dt: s.dt(),
            nodes,
        })
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.nodes[0].norm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn bracket(&self, g: f64) -> (usize, f64) {
        let x = (g.abs() / self.g_max).min(1.0) * (self.nodes.len() - 1) as f64;
        let j = (x.floor() as usize).min(self.nodes.len() - 2);
        (j, x - j as f64)
    }

    fn lerp(&self, g: f64, f: impl Fn(&Node) -> f64) -> f64 {
        let (j, w) = self.bracket(g);
        (1.0 - w) * f(&self.nodes[j]) + w * f(&self.nodes[j + 1])
    }

    pub fn cavity_probability(&self, g: f64) -> f64 {
        self.lerp(g, |n| *n.emitted.last().unwrap())
    }

    pub fn spontaneous_probability(&self, g: f64) -> f64 {
        self.lerp(g, |n| *n.spont.last().unwrap())
    }

    /// Interpolated photon amplitude on the drive grid.
    pub fn amplitude(&self, g: f64) -> Vec<f64> {
        let (j, w) = self.bracket(g);
        let (a, b) = (&self.nodes[j].phi, &self.nodes[j + 1].phi);
        let sign = if g < 0.0 { -1.0 } else { 1.0 };
        a.iter().zip(b).map(|(x, y)| sign * ((1.0 - w) * x + w * y)).collect()
    }

    /// Amplitude at time `t` (absolute, same origin as the drive), zero
    /// outside the window.
    pub fn amplitude_at(&self, g: f64, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x < 0.0 || x > (self.len() - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(self.len() - 2);
        let f = x - i as f64;
        let (j, w) = self.bracket(g);
        let at = |n: &Node| n.phi[i] * (1.0 - f) + n.phi[i + 1] * f;
        let sign = if g < 0.0 { -1.0 } else { 1.0 };
        sign * ((1.0 - w) * at(&self.nodes[j]) + w * at(&self.nodes[j + 1]))
    }

    /// Quantum-jump outcome for an atom that sees constant coupling `g`.
    pub fn sample<R: Rng + ?Sized>(&self, g: f64, rng: &mut R) -> Outcome {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let (j, w) = self.bracket(g);
        let (a, b) = (&self.nodes[j], &self.nodes[j + 1]);
        let mix = |x: &[f64], y: &[f64], i: usize| (1.0 - w) * x[i] + w * y[i];
        locate_jump(
            u,
            v,
            self.len(),
            |i| mix(&a.norm, &b.norm, i),
            |i| mix(&a.emitted, &b.emitted, i),
            |i| mix(&a.spont, &b.spont, i),
        )
        .map(|(i, frac, cavity)| {
            let t_emit = self.t0 + (i as f64 - 1.0 + frac) * self.dt;
            if cavity {
                Outcome::CavityPhoton { t_emit }
            } else {
                Outcome::SpontaneousLoss { t_emit }
            }
        })
        .unwrap_or(Outcome::NoEvent)
    }
}
