use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic drive/repump sequence and the run's time layout.
///
/// Shots are laid end to end in absolute time: shot `s` covers
/// `[s T_shot, (s + 1) T_shot)` with `T_shot = pulses_per_shot * period`.
/// Pulse `k` of a shot starts at `k * period` within it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSchedule {
    pub period: f64,
    pub drive_start: f64,
    pub drive_duration: f64,
    pub repump_start: f64,
    pub repump_duration: f64,
    pub pulses_per_shot: u32,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        Self {
            period: 1e-6,
            drive_start: 0.0,
            drive_duration: 350e-9,
            repump_start: 400e-9,
            repump_duration: 500e-9,
            pulses_per_shot: 20_000,
        }
    }
}

/// Position of an absolute time on the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotPosition {
    pub shot: u32,
    pub pulse: u32,
    /// Time since the start of the pulse period.
    pub phase: f64,
}

impl PulseSchedule {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.period > 0.0) {
            v.push(format!("schedule.period must be > 0 (got {})", self.period));
        }
        if !(self.drive_duration > 0.0) {
            v.push(format!("schedule.drive_duration must be > 0 (got {})", self.drive_duration));
        }
        if !(self.repump_duration >= 0.0) {
            v.push(format!("schedule.repump_duration must be >= 0 (got {})", self.repump_duration));
        }
        if self.pulses_per_shot == 0 {
            v.push("schedule.pulses_per_shot must be >= 1".into());
        }
        if self.drive_start < 0.0 || self.drive_start + self.drive_duration > self.period {
            v.push(format!(
                "drive window [{:e}, {:e}] s does not fit the {:e} s period",
                self.drive_start,
                self.drive_start + self.drive_duration,
                self.period
            ));
        }
        if self.repump_start < 0.0 || self.repump_start + self.repump_duration > self.period {
            v.push(format!(
                "repump window [{:e}, {:e}] s does not fit the {:e} s period",
                self.repump_start,
                self.repump_start + self.repump_duration,
                self.period
            ));
        }
        let (a0, a1) = self.drive_window();
        let (b0, b1) = self.repump_window();
        if self.repump_duration > 0.0 && a0 < b1 && b0 < a1 {
            v.push(format!("drive window [{a0:e}, {a1:e}] overlaps repump window [{b0:e}, {b1:e}]"));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.iter().any(|m| m.contains("overlaps")) {
            return Err(Error::OverlappingWindows(v.join("; ")));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn drive_window(&self) -> (f64, f64) {
        (self.drive_start, self.drive_start + self.drive_duration)
    }

    pub fn repump_window(&self) -> (f64, f64) {
        (self.repump_start, self.repump_start + self.repump_duration)
    }

    pub fn shot_duration(&self) -> f64 {
        self.pulses_per_shot as f64 * self.period
    }

    pub fn shot_start(&self, shot: u32) -> f64 {
        shot as f64 * self.shot_duration()
    }

    /// Absolute start of pulse `pulse` in shot `shot`.
    pub fn pulse_start(&self, shot: u32, pulse: u32) -> f64 {
        self.shot_start(shot) + pulse as f64 * self.period
    }

    /// Absolute start of the drive window of a pulse.
    pub fn drive_start_time(&self, shot: u32, pulse: u32) -> f64 {
        self.pulse_start(shot, pulse) + self.drive_start
    }

    pub fn locate(&self, t: f64) -> SlotPosition {
        let shot = (t / self.shot_duration()).floor().max(0.0);
        let within = t - shot * self.shot_duration();
        let pulse = (within / self.period).floor().clamp(0.0, (self.pulses_per_shot - 1) as f64);
        SlotPosition { shot: shot as u32, pulse: pulse as u32, phase: within - pulse * self.period }
    }

    pub fn in_drive(&self, phase: f64) -> bool {
        let (a, b) = self.drive_window();
        phase >= a && phase < b
    }

    pub fn in_repump(&self, phase: f64) -> bool {
        let (a, b) = self.repump_window();
        phase >= a && phase < b
    }
}
