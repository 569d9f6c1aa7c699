//! CSV tables with `#` metadata lines, and JSON reports with a `meta` block.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::OutputConfig;
use crate::failure::Failure;

pub const UNITS: &str = "energies in D, times in 1/D, hbar = k_B = 1";

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub program: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub units: &'static str,
}

impl Meta {
    pub fn new(config_sha256: &str) -> Self {
        Self {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: config_sha256.to_string(),
            units: UNITS,
        }
    }
}

/// Column-oriented table; every column has one entry per row.
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip representation, scientific outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `NaN` marks undefined entries.
pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NaN".to_string(), num)
}

pub struct Writer<'a> {
    pub meta: Meta,
    output: &'a OutputConfig,
}

impl<'a> Writer<'a> {
    pub fn new(output: &'a OutputConfig, config_sha256: &str) -> Result<Self, Failure> {
        fs::create_dir_all(&output.directory)
            .map_err(|e| Failure::Config(format!("output directory {}: {e}", output.directory.display())))?;
        Ok(Self { meta: Meta::new(config_sha256), output })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output.directory.join(name)
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<Option<PathBuf>, Failure> {
        if !self.output.csv() {
            return Ok(None);
        }
        let path = self.path(name);
        write_csv(&path, &self.meta, table)?;
        Ok(Some(path))
    }

    pub fn json<T: Serialize>(&self, name: &str, body: &T) -> Result<Option<PathBuf>, Failure> {
        if !self.output.json() {
            return Ok(None);
        }
        let path = self.path(name);
        let mut out = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut out, &Report { meta: &self.meta, report: body })?;
        writeln!(out)?;
        out.flush()?;
        Ok(Some(path))
    }
}

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub meta: &'a Meta,
    #[serde(flatten)]
    pub report: &'a T,
}

pub fn write_csv(path: &Path, meta: &Meta, table: &Table) -> Result<(), Failure> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "# {} {}", meta.program, meta.version)?;
    writeln!(file, "# config sha256 {}", meta.config_sha256)?;
    writeln!(file, "# units: {}", meta.units)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
