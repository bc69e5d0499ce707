//! Analog inputs: labeled complex baseband envelopes for the three tasks.
//!
//! Generators return unit-level signals; the drive amplitude applied to the
//! oscillator is `ProtocolConfig::input_scale` times the sample value.

mod io;
mod modulation;
mod noise;
mod spiral;

pub use io::{read_dataset, read_signal_file, write_dataset, write_signal_file, DatasetManifest, SignalEntry};
pub use modulation::{constellation, gen_modulated, scheme_name, ModulationOptions, N_SCHEMES};
pub use noise::{filtered_noise, gen_filtered_noise, kernel_table, FilterKernel, KernelShape, NOISE_CLASSES};
pub use spiral::{gen_spiral, gen_spiral_example, spiral_point, SpiralOptions, SPIRAL_R_MAX};

use crate::error::{QrcError, Result};
use crate::fock::C64;
use serde::{Deserialize, Serialize};

/// Where a signal came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalMeta {
    pub source: String,
    pub seed: u64,
}

/// Uniformly sampled complex envelope, held constant over each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<C64>,
    dt: f64,
    meta: SignalMeta,
}

impl ComplexSignal {
    pub fn new(samples: Vec<C64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(QrcError::Config(format!("signal dt must be positive, got {dt}")));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QrcError::Config("signal contains non-finite samples".into()));
        }
        Ok(Self { samples, dt, meta: SignalMeta::default() })
    }

    pub fn with_meta(mut self, source: impl Into<String>, seed: u64) -> Self {
        self.meta = SignalMeta { source: source.into(), seed };
        self
    }

    pub fn zeros(n: usize, dt: f64) -> Self {
        Self::constant(C64::new(0.0, 0.0), n, dt)
    }

    pub fn constant(value: C64, n: usize, dt: f64) -> Self {
        Self { samples: vec![value; n], dt, meta: SignalMeta::default() }
    }

    /// A zero-length signal, used where a drive is absent.
    pub fn empty() -> Self {
        Self { samples: Vec::new(), dt: 1.0, meta: SignalMeta::default() }
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }

    pub fn meta(&self) -> &SignalMeta {
        &self.meta
    }

    /// Samples `[start, start + n)` as a new signal.
    pub fn window(&self, start: usize, n: usize) -> Result<ComplexSignal> {
        if start + n > self.len() {
            return Err(QrcError::SignalTooShort { needed: start + n, available: self.len() });
        }
        Ok(Self { samples: self.samples[start..start + n].to_vec(), dt: self.dt, meta: self.meta.clone() })
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len().max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Spiral,
    Modulation,
    FilteredNoise,
}

impl TaskKind {
    pub fn n_classes(self) -> usize {
        match self {
            TaskKind::Spiral => 2,
            TaskKind::Modulation => N_SCHEMES,
            TaskKind::FilteredNoise => NOISE_CLASSES.len(),
        }
    }

    /// Static tasks present the same input in every round of every shot;
    /// the others stream, consuming fresh segments shot after shot.
    pub fn is_static(self) -> bool {
        matches!(self, TaskKind::Spiral)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub signal: ComplexSignal,
    pub class_id: usize,
    pub task: TaskKind,
}
