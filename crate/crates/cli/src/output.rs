use std::io::Write;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Result of one experiment: named columns, rows in output order, and the
/// invariant checks that failed.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub violations: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }
}

/// Git-style blob hash, `sha256("blob <len>\0" ‖ bytes)`, of the resolved config
/// followed by any input files.
pub fn content_hash(resolved: &str, inputs: &[Vec<u8>]) -> String {
    let mut bytes = resolved.as_bytes().to_vec();
    for i in inputs {
        bytes.extend_from_slice(i);
    }
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(&bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_csv<W: Write>(
    out: W,
    experiment: &str,
    resolved: &Value,
    seed: u64,
    inputs: &[Vec<u8>],
    table: &Table,
) -> Result<(), CliError> {
    let config = serde_json::to_string(resolved).map_err(|e| CliError::Config(e.to_string()))?;
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "# walklab {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# experiment: {experiment}")?;
    writeln!(out, "# config: {config}")?;
    writeln!(out, "# seed: {seed}")?;
    writeln!(out, "# input-sha256: {}", content_hash(&format!("{experiment}\n{config}\n{seed}"), inputs))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
