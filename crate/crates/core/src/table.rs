//! CSV output shared by all artifacts.

use crate::error::{QrcError, Result};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Identifies the run that produced an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    pub fn comment_line(&self) -> String {
        format!("# qrc config_hash={} master_seed={}", self.config_hash, self.master_seed)
    }
}

/// Fixed 17-significant-digit formatting, so equal values always print the same.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(out: W, prov: Option<&Provenance>, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut out = out;
    if let Some(p) = prov {
        writeln!(out, "{}", p.comment_line())?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, prov: Option<&Provenance>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let f = File::create(path).map_err(|e| QrcError::io(path, e))?;
    write_csv(BufWriter::new(f), prov, header, rows).map_err(|e| QrcError::io(path, e))
}

/// Reads a CSV written by [`write_csv`], skipping `#` comment lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| QrcError::Format { path: path.display().to_string(), msg: e.to_string() })?;
    let fmt = |e: csv::Error| QrcError::Format { path: path.display().to_string(), msg: e.to_string() };
    let header = r.headers().map_err(fmt)?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(fmt)).collect::<Result<_>>()?;
    Ok((header, rows))
}
