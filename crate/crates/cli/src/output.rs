//! Plot-ready tables and JSON sidecars. Every file opens with a line naming
//! its kind, schema version and config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub struct Table {
    out: BufWriter<File>,
}

impl Table {
    pub fn create(path: &Path, kind: &str, config_hash: &str, columns: &[&str]) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# spsource-{kind} schema={SCHEMA_VERSION} config={config_hash}")?;
        writeln!(out, "{}", columns.join("\t"))?;
        Ok(Self { out })
    }

    pub fn row(&mut self, values: &[String]) -> Result<()> {
        writeln!(self.out, "{}", values.join("\t"))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.9e}")
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    schema_version: u32,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, config_hash: &str, body: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, &Stamped { schema_version: SCHEMA_VERSION, config_hash, body })?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
