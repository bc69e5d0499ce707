use crate::error::{QrcError, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Bits recorded in one shot. With one qubit, even positions hold qubit
/// outcomes (`g`=0, `e`=1) and odd positions parity outcomes (even=0, odd=1).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub bits: Vec<u8>,
    pub shot_seed: u64,
}

impl TrajectoryRecord {
    /// Bitstring as an integer, first bit most significant.
    pub fn code(&self) -> usize {
        self.bits.iter().fold(0, |c, &b| (c << 1) | b as usize)
    }

    pub fn from_code(code: usize, m: usize, shot_seed: u64) -> Self {
        let bits = (0..m).map(|i| ((code >> (m - 1 - i)) & 1) as u8).collect();
        Self { bits, shot_seed }
    }
}

#[derive(Serialize, Deserialize)]
struct Line<'a> {
    seed: u64,
    bits: std::borrow::Cow<'a, [u8]>,
    signal_id: std::borrow::Cow<'a, str>,
}

/// One JSON object per line: `{"seed":..,"bits":[..],"signal_id":".."}`.
pub fn write_trajectories_jsonl<W: Write>(out: &mut W, records: &[TrajectoryRecord], signal_id: &str) -> std::io::Result<()> {
    for r in records {
        let line = Line { seed: r.shot_seed, bits: (&r.bits[..]).into(), signal_id: signal_id.into() };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_trajectories_jsonl<R: BufRead>(input: R) -> Result<Vec<(String, TrajectoryRecord)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| QrcError::io("<trajectories>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line)
            .map_err(|e| QrcError::Format { path: format!("<trajectories> line {}", i + 1), msg: e.to_string() })?;
        out.push((l.signal_id.into_owned(), TrajectoryRecord { bits: l.bits.into_owned(), shot_seed: l.seed }));
    }
    Ok(out)
}
