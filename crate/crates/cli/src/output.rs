//! CSV files and the run manifest.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use dephasing_core::params::SchemeConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Fixed scientific format with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty field for an undefined value.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

#[derive(Debug, Serialize)]
struct OutputFile {
    file: String,
    sha256: String,
    rows: usize,
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize, R: Serialize> {
    command: &'a str,
    version: &'a str,
    timestamp_unix_s: u64,
    config: &'a SchemeConfig,
    arguments: A,
    outputs: &'a [OutputFile],
    report: R,
}

/// Output directory collecting every file written by one command.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<OutputFile>,
}

impl OutDir {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, written: Vec::new() }
    }

    fn write(&mut self, name: &str, bytes: &[u8], rows: usize) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(CliError::io(format!("writing {}", path.display())))?;
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.written.push(OutputFile { file: name.to_owned(), sha256, rows });
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Io { context: format!("encoding {name}"), source: e.into() };
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes =
            w.into_inner().map_err(|e| CliError::Io { context: format!("encoding {name}"), source: e.into_error() })?;
        self.write(name, &bytes, rows.len())
    }

    /// Writes `<command>.manifest.json` and echoes the report on stdout.
    pub fn finish(
        mut self,
        command: &str,
        cfg: &SchemeConfig,
        arguments: impl Serialize,
        report: impl Serialize,
    ) -> Result<(), CliError> {
        let timestamp_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let report = serde_json::to_value(report).expect("report serializes");
        let outputs = std::mem::take(&mut self.written);
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix_s,
            config: cfg,
            arguments,
            outputs: &outputs,
            report: &report,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        let path = self.dir.join(format!("{command}.manifest.json"));
        std::fs::write(&path, text + "\n").map_err(CliError::io(format!("writing {}", path.display())))?;
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        Ok(())
    }
}
