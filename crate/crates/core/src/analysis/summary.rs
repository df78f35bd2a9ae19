use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One named statistic in a machine-readable summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub statistic: String,
    pub value: f64,
    pub uncertainty: f64,
    pub n_events: u64,
}

impl SummaryRecord {
    pub fn new(statistic: impl Into<String>, value: f64, uncertainty: f64, n_events: u64) -> Self {
        Self { statistic: statistic.into(), value, uncertainty, n_events }
    }
}

pub fn write_summary<W: Write>(mut out: W, schema: u32, config_hash: &str, records: &[SummaryRecord]) -> Result<()> {
    writeln!(out, "# spsource-summary schema={schema} config={config_hash}")?;
    writeln!(out, "statistic\tvalue\tuncertainty\tn_events")?;
    for r in records {
        writeln!(out, "{}\t{:.9e}\t{:.3e}\t{}", r.statistic, r.value, r.uncertainty, r.n_events)?;
    }
    Ok(())
}
