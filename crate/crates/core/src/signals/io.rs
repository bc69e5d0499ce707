//! Dataset files: a JSON manifest next to one binary file per signal.
//!
//! Binary layout: 8-byte magic `QRCSIG1\0`, u32 sample count, u32 reserved
//! (zero), then little-endian f64 pairs `(re, im)`.

use super::{ComplexSignal, LabeledExample, TaskKind};
use crate::error::{QrcError, Result};
use crate::fock::C64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"QRCSIG1\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalEntry {
    pub file: String,
    pub class_id: usize,
    pub seed: u64,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub task: TaskKind,
    pub classes: Vec<String>,
    pub master_seed: u64,
    pub dt: f64,
    pub input_scale: f64,
    pub config_hash: String,
    pub signals: Vec<SignalEntry>,
}

pub fn write_signal_file(path: &Path, signal: &ComplexSignal) -> Result<()> {
    let n = u32::try_from(signal.len())
        .map_err(|_| QrcError::Format { path: path.display().to_string(), msg: "signal longer than u32::MAX samples".into() })?;
    let mut buf = Vec::with_capacity(16 + 16 * signal.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    for z in signal.samples() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| QrcError::io(path, e))
}

pub fn read_signal_file(path: &Path, dt: f64) -> Result<ComplexSignal> {
    let bad = |msg: &str| QrcError::Format { path: path.display().to_string(), msg: msg.into() };
    let buf = fs::read(path).map_err(|e| QrcError::io(path, e))?;
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(bad("missing QRCSIG1 header"));
    }
    let n = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    if buf.len() != 16 + 16 * n {
        return Err(bad("length field does not match file size"));
    }
    let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let samples = (0..n).map(|k| C64::new(f(16 + 16 * k), f(24 + 16 * k))).collect();
    ComplexSignal::new(samples, dt)
}

/// Writes `manifest.json` and the signal files into `dir`. The manifest's
/// `signals` list is rebuilt from `examples` and `splits`.
pub fn write_dataset(dir: &Path, mut manifest: DatasetManifest, examples: &[LabeledExample], splits: &[&str]) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| QrcError::io(dir, e))?;
    manifest.signals.clear();
    for (i, ex) in examples.iter().enumerate() {
        let file = format!("signal_{i:05}.bin");
        write_signal_file(&dir.join(&file), &ex.signal)?;
        manifest.signals.push(SignalEntry {
            file,
            class_id: ex.class_id,
            seed: ex.signal.meta().seed,
            split: splits.get(i).copied().unwrap_or("train").to_string(),
        });
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| QrcError::io(&path, e))?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<LabeledExample>)> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| QrcError::io(&path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| QrcError::Format { path: path.display().to_string(), msg: e.to_string() })?;
    let mut out = Vec::with_capacity(manifest.signals.len());
    for entry in &manifest.signals {
        let signal = read_signal_file(&dir.join(&entry.file), manifest.dt)?;
        out.push(LabeledExample { signal, class_id: entry.class_id, task: manifest.task });
    }
    Ok((manifest, out))
}
