//! Detector click streams from emitted photons.

mod chain;
mod clicks;
mod schedule;
mod synth;

pub use chain::{EfficiencyChain, DETECTOR_RESOLUTION_FWHM};
pub use clicks::{
    check_sorted, detector_times, read_binary, read_stream, read_text, seconds_to_ps, write_binary, write_stream,
    write_text, ClickRecord, Detector, StreamFormat, StreamHeader, CLICK_SCHEMA_VERSION, PS_PER_S,
};
pub use schedule::{PulseSchedule, SlotPosition};
pub use synth::{
    detect, route_hbt, route_hom, split_probability, synthesize_clicks, thin, Arrival, ClickSource, ClickStream,
    HomStats, InterferometerConfig, InterferometerKind, Polarization, PhotonEvent, Wavepacket,
};
