use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLICK_SCHEMA_VERSION: u32 = 1;
const BINARY_MAGIC: &[u8; 8] = b"SPCLICK\x01";
const RECORD_BYTES: usize = 8 + 1 + 4 + 4 + 1;
const FLAG_REPUMP: u8 = 1;

pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
}

impl Detector {
    pub fn code(self) -> u8 {
        match self {
            Detector::D1 => 1,
            Detector::D2 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Detector::D1),
            2 => Some(Detector::D2),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Detector::D1 => Detector::D2,
            Detector::D2 => Detector::D1,
        }
    }
}

/// One detector click. Times are integer picoseconds since the start of shot 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub t_ps: u64,
    pub detector: Detector,
    pub pulse_index: u32,
    pub shot_index: u32,
    pub in_repump_window: bool,
}

impl ClickRecord {
    pub fn t(&self) -> f64 {
        self.t_ps as f64 / PS_PER_S
    }

    fn flags(&self) -> u8 {
        if self.in_repump_window {
            FLAG_REPUMP
        } else {
            0
        }
    }
}

pub fn seconds_to_ps(t: f64) -> u64 {
    (t * PS_PER_S).round().max(0.0) as u64
}

/// Metadata carried in both serializations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StreamHeader {
    pub schema_version: u32,
    pub config_hash: String,
}

impl StreamHeader {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self { schema_version: CLICK_SCHEMA_VERSION, config_hash: config_hash.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamFormat {
    Text,
    Binary,
}

/// Verifies that times never decrease.
pub fn check_sorted(records: &[ClickRecord]) -> Result<()> {
    match records.windows(2).position(|w| w[1].t_ps < w[0].t_ps) {
        Some(i) => Err(Error::UnsortedStream(i + 1)),
        None => Ok(()),
    }
}

/// Clicks of one detector, in stream order.
pub fn detector_times(records: &[ClickRecord], detector: Detector) -> Vec<f64> {
    records.iter().filter(|r| r.detector == detector).map(|r| r.t()).collect()
}

pub fn write_stream<W: Write>(out: W, header: &StreamHeader, records: &[ClickRecord], format: StreamFormat) -> Result<()> {
    match format {
        StreamFormat::Text => write_text(out, header, records),
        StreamFormat::Binary => write_binary(out, header, records),
    }
}

/// Reads either serialization, recognised by the leading magic bytes.
pub fn read_stream<R: Read>(mut input: R) -> Result<(StreamHeader, Vec<ClickRecord>)> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.starts_with(BINARY_MAGIC) {
        read_binary(&buf[..])
    } else {
        read_text(&buf[..])
    }
}

pub fn write_text<W: Write>(mut out: W, header: &StreamHeader, records: &[ClickRecord]) -> Result<()> {
    writeln!(out, "# spsource-clicks schema={} config={}", header.schema_version, header.config_hash)?;
    writeln!(out, "# t_ps\tdetector\tpulse\tshot\tflags")?;
    for r in records {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.t_ps, r.detector.code(), r.pulse_index, r.shot_index, r.flags())?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<(StreamHeader, Vec<ClickRecord>)> {
    let mut header = StreamHeader::default();
    let mut records = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            for token in meta.split_whitespace() {
                if let Some(v) = token.strip_prefix("schema=") {
                    header.schema_version = v.parse().map_err(|_| bad(lineno, "schema version"))?;
                } else if let Some(v) = token.strip_prefix("config=") {
                    header.config_hash = v.to_string();
                }
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(bad(lineno, &format!("expected 5 fields, found {}", fields.len())));
        }
        let t_ps = fields[0].parse().map_err(|_| bad(lineno, "timestamp"))?;
        let code: u8 = fields[1].parse().map_err(|_| bad(lineno, "detector"))?;
        let detector = Detector::from_code(code).ok_or_else(|| bad(lineno, "detector code"))?;
        let pulse_index = fields[2].parse().map_err(|_| bad(lineno, "pulse index"))?;
        let shot_index = fields[3].parse().map_err(|_| bad(lineno, "shot index"))?;
        let flags: u8 = fields[4].parse().map_err(|_| bad(lineno, "flags"))?;
        records.push(ClickRecord { t_ps, detector, pulse_index, shot_index, in_repump_window: flags & FLAG_REPUMP != 0 });
    }
    if header.schema_version != CLICK_SCHEMA_VERSION {
        return Err(bad(1, &format!("unsupported schema version {}", header.schema_version)));
    }
    Ok((header, records))
}

/// Layout: magic, `u32` schema version, `u32` hash length, hash bytes,
/// `u64` record count, then little-endian records of
/// `(u64 t_ps, u8 detector, u32 pulse, u32 shot, u8 flags)`.
pub fn write_binary<W: Write>(mut out: W, header: &StreamHeader, records: &[ClickRecord]) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&header.schema_version.to_le_bytes())?;
    let hash = header.config_hash.as_bytes();
    out.write_all(&(hash.len() as u32).to_le_bytes())?;
    out.write_all(hash)?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(records.len() * RECORD_BYTES);
    for r in records {
        buf.extend_from_slice(&r.t_ps.to_le_bytes());
        buf.push(r.detector.code());
        buf.extend_from_slice(&r.pulse_index.to_le_bytes());
        buf.extend_from_slice(&r.shot_index.to_le_bytes());
        buf.push(r.flags());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary(data: &[u8]) -> Result<(StreamHeader, Vec<ClickRecord>)> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = data.get(pos..pos + n).ok_or_else(|| bad(0, "truncated binary stream"))?;
        pos += n;
        Ok(s)
    };
    if take(8)? != BINARY_MAGIC {
        return Err(bad(0, "not a binary click stream"));
    }
    let schema_version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if schema_version != CLICK_SCHEMA_VERSION {
        return Err(bad(0, &format!("unsupported schema version {schema_version}")));
    }
    let hash_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let config_hash = String::from_utf8(take(hash_len)?.to_vec()).map_err(|_| bad(0, "config hash is not UTF-8"))?;
    let n = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let r = take(RECORD_BYTES)?;
        let detector = Detector::from_code(r[8]).ok_or_else(|| bad(i + 1, "detector code"))?;
        records.push(ClickRecord {
            t_ps: u64::from_le_bytes(r[0..8].try_into().unwrap()),
            detector,
            pulse_index: u32::from_le_bytes(r[9..13].try_into().unwrap()),
            shot_index: u32::from_le_bytes(r[13..17].try_into().unwrap()),
            in_repump_window: r[17] & FLAG_REPUMP != 0,
        });
    }
    Ok((StreamHeader { schema_version, config_hash }, records))
}

fn bad(line: usize, reason: &str) -> Error {
    Error::Format { line, reason: reason.to_string() }
}
