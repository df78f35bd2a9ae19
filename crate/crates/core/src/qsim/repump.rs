use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trajectory::Outcome;

/// Optical pumping back to |e,0> between production pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Repumper {
    pub success_probability: f64,
    /// Length of the repump window, seconds.
    pub duration: f64,
}

impl Default for Repumper {
    fn default() -> Self {
        Self {
            success_probability: 1.0,
            duration: 500e-9,
        }
    }
}

/// Result of one repump window. The window is always flagged for masking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepumpResult {
    pub ready: bool,
    pub window: (f64, f64),
    pub masked: bool,
}

impl Repumper {
    /// An atom that produced no event is still in |e> and stays ready;
    /// otherwise pumping succeeds with `success_probability`.
    pub fn apply<R: Rng + ?Sized>(&self, after: &Outcome, start: f64, rng: &mut R) -> RepumpResult {
        let ready = match after {
            Outcome::NoEvent => true,
            _ => rng.random::<f64>() < self.success_probability,
        };
        RepumpResult {
            ready,
            window: (start, start + self.duration),
            masked: true,
        }
    }
}

/// Seeded single repump.
pub fn repump(after: &Outcome, repumper: &Repumper, start: f64, seed: u64) -> RepumpResult {
    repumper.apply(after, start, &mut ChaCha8Rng::seed_from_u64(seed))
}
