use serde::{Deserialize, Serialize};

use crate::photostream::{ClickRecord, PulseSchedule};

/// Post-selection of time bins with many clicks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitSelection {
    pub bin_width: f64,
    /// A bin is selected when it holds more than this many clicks.
    pub threshold_counts: u32,
}

impl Default for TransitSelection {
    fn default() -> Self {
        Self { bin_width: 100e-6, threshold_counts: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedBin {
    pub shot: u32,
    pub start: f64,
    pub end: f64,
    pub counts: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionResult {
    pub bins: Vec<SelectedBin>,
    /// Runs of adjacent selected bins, as absolute `(start, end)`.
    pub transits: Vec<(f64, f64)>,
    pub clicks: Vec<ClickRecord>,
}

/// Bins each shot from its start, counts clicks outside repump windows, and
/// keeps the bins with more than `threshold_counts` clicks.
pub fn select_transits(records: &[ClickRecord], selection: &TransitSelection, schedule: &PulseSchedule) -> SelectionResult {
    let threshold = selection.threshold_counts.max(1);
    let key = |r: &ClickRecord| {
        let start = schedule.shot_start(r.shot_index);
        (r.shot_index, ((r.t() - start) / selection.bin_width).floor().max(0.0) as u64)
    };
    let live: Vec<&ClickRecord> = records.iter().filter(|r| !r.in_repump_window).collect();
    let mut out = SelectionResult::default();
    let mut i = 0;
    while i < live.len() {
        let k = key(live[i]);
        let mut j = i + 1;
        while j < live.len() && key(live[j]) == k {
            j += 1;
        }
        let counts = (j - i) as u32;
        if counts > threshold {
            let start = schedule.shot_start(k.0) + k.1 as f64 * selection.bin_width;
            let end = start + selection.bin_width;
            out.bins.push(SelectedBin { shot: k.0, start, end, counts });
            out.clicks.extend(live[i..j].iter().map(|r| **r));
            match out.transits.last_mut() {
                Some(last) if (last.1 - start).abs() < 1e-3 * selection.bin_width => last.1 = end,
                _ => out.transits.push((start, end)),
            }
        }
        i = j;
    }
    out
}
