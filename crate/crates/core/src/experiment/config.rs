use crate::error::{QrcError, Result};
use crate::features::MomentFeatureSpec;
use crate::fock::SystemParams;
use crate::learn::TrainConfig;
use crate::reservoir::{GateSchedule, MultiQubitGrid, Propagator, ProtocolConfig, QubitCarry};
use crate::signals::{TaskKind, NOISE_CLASSES, N_SCHEMES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    /// Dispersive shift in MHz (`chi = 2 pi chi_mhz` rad/us).
    pub chi_mhz: f64,
    /// Fock truncation; task default when absent.
    pub n_fock: Option<usize>,
    pub guard_threshold: f64,
    pub integrator_dt: f64,
    pub alpha: f64,
    pub alpha_phases: Vec<f64>,
    pub rounds_per_shot: usize,
    pub segment_multiplier: usize,
    /// Ground-branch displacement per segment for a unit input. Task default
    /// when absent.
    pub segment_gain: Option<f64>,
    pub carry: QubitCarry,
    pub gates: GateSchedule,
    pub propagator: Propagator,
    /// Registers of more than one qubit use the standard displacement grid.
    pub n_qubits: usize,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolConfig::default();
        Self {
            chi_mhz: p.system.chi / (2.0 * PI),
            n_fock: None,
            guard_threshold: p.system.guard_threshold,
            integrator_dt: p.system.integrator_dt,
            alpha: p.alpha,
            alpha_phases: p.alpha_phases,
            rounds_per_shot: p.rounds_per_shot,
            segment_multiplier: p.segment_multiplier,
            segment_gain: None,
            carry: p.carry,
            gates: p.gates,
            propagator: p.propagator,
            n_qubits: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalSection {
    /// Samples per segment for streaming tasks.
    pub samples_per_segment: Option<usize>,
    /// Modulation symbol length in us; one segment when absent.
    pub symbol_duration: Option<f64>,
    /// Half-width of uniform jitter on spiral points.
    pub spiral_jitter: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        Self { samples_per_segment: None, symbol_duration: None, spiral_jitter: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub n_train_per_class: usize,
    pub n_test_per_class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    LinearRaw,
    CavityOnly,
    QubitOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub feature: MomentFeatureSpec,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub dataset: Option<DatasetSection>,
    /// Restricts the task to these class ids, relabelled `0..k` in order.
    #[serde(default)]
    pub classes: Option<Vec<usize>>,
    #[serde(default)]
    pub shot_budgets: Option<Vec<usize>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub baselines: Vec<BaselineKind>,
    /// Not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            protocol: ProtocolSection::default(),
            signal: SignalSection::default(),
            feature: MomentFeatureSpec::default(),
            train: TrainConfig::default(),
            dataset: None,
            classes: None,
            shot_budgets: None,
            master_seed: 0,
            baselines: Vec::new(),
            output_dir: None,
        }
    }

    /// Parses JSON. A run manifest (an object with a `config` member) is
    /// accepted as well, so runs can be repeated from their manifest.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| QrcError::Config(format!("invalid JSON: {e}")))?;
        let bad = |e: serde_json::Error| QrcError::Config(format!("bad config: {e}"));
        let cfg: Self = match value.get("config") {
            Some(c) if c.is_object() => serde_json::from_value(c.clone()).map_err(bad)?,
            // parse the text itself so errors carry line numbers
            _ => serde_json::from_str(text).map_err(bad)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QrcError::io(path, e))?;
        // line/column of JSON errors refer to this file
        Self::from_json(&text).map_err(|e| match e {
            QrcError::Config(msg) => QrcError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Fills every task-dependent default.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.protocol.segment_gain = Some(self.segment_gain());
        c.protocol.n_fock = Some(self.n_fock());
        c.signal.samples_per_segment = Some(self.samples_per_segment());
        if self.task == TaskKind::Modulation && c.signal.symbol_duration.is_none() {
            c.signal.symbol_duration = Some(self.protocol_config().map(|p| p.segment_duration()).unwrap_or(0.0));
        }
        c.dataset = Some(self.dataset_sizes());
        c.shot_budgets = Some(self.budgets());
        c
    }

    pub fn segment_gain(&self) -> f64 {
        self.protocol.segment_gain.unwrap_or(match self.task {
            TaskKind::Spiral => 1.0,
            TaskKind::Modulation => 1.0,
            TaskKind::FilteredNoise => 6.0,
        })
    }

    /// Streaming tasks leave more photons in the cavity and need headroom.
    pub fn n_fock(&self) -> usize {
        self.protocol.n_fock.unwrap_or(match self.task {
            TaskKind::Spiral => 32,
            TaskKind::Modulation | TaskKind::FilteredNoise => 48,
        })
    }

    pub fn samples_per_segment(&self) -> usize {
        self.signal.samples_per_segment.unwrap_or(match self.task {
            TaskKind::Spiral | TaskKind::Modulation => 1,
            TaskKind::FilteredNoise => 64,
        })
    }

    pub fn dataset_sizes(&self) -> DatasetSection {
        self.dataset.unwrap_or(match self.task {
            TaskKind::Spiral => DatasetSection { n_train_per_class: 500, n_test_per_class: 250 },
            _ => DatasetSection { n_train_per_class: 100, n_test_per_class: 50 },
        })
    }

    pub fn budgets(&self) -> Vec<usize> {
        self.shot_budgets.clone().unwrap_or_else(|| match self.task {
            TaskKind::Spiral => vec![10, 100, 1000, 10_000],
            TaskKind::Modulation => vec![32, 512, 10_000],
            TaskKind::FilteredNoise => vec![100, 500, 2000],
        })
    }

    /// Class ids of the underlying task that take part, in label order.
    pub fn class_ids(&self) -> Vec<usize> {
        self.classes.clone().unwrap_or_else(|| (0..self.task.n_classes()).collect())
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let p = &self.protocol;
        let system = SystemParams {
            chi: 2.0 * PI * p.chi_mhz,
            n_fock: self.n_fock(),
            guard_threshold: p.guard_threshold,
            integrator_dt: p.integrator_dt,
        };
        let grid = if p.n_qubits > 1 { Some(MultiQubitGrid::standard(p.n_qubits)?) } else { None };
        let mut cfg = ProtocolConfig {
            alpha: p.alpha,
            alpha_phases: p.alpha_phases.clone(),
            rounds_per_shot: p.rounds_per_shot,
            segment_multiplier: p.segment_multiplier,
            system,
            input_scale: 1.0,
            carry: p.carry,
            gates: p.gates,
            propagator: p.propagator,
            grid,
        };
        cfg.validate()?;
        cfg.input_scale = self.segment_gain() / cfg.segment_duration();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let proto = self.protocol_config()?;
        self.feature.validate()?;
        if self.feature.m != proto.m() {
            return Err(QrcError::Config(format!("feature.m = {} but the protocol records {} bits per shot", self.feature.m, proto.m())));
        }
        self.train.validate()?;
        let budgets = self.budgets();
        if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) || budgets[0] < 2 {
            return Err(QrcError::Config("shot_budgets must be strictly ascending and at least 2".into()));
        }
        let d = self.dataset_sizes();
        if d.n_train_per_class == 0 || d.n_test_per_class == 0 {
            return Err(QrcError::Config("dataset sizes must be positive".into()));
        }
        let ids = self.class_ids();
        let n = match self.task {
            TaskKind::Spiral => 2,
            TaskKind::Modulation => N_SCHEMES,
            TaskKind::FilteredNoise => NOISE_CLASSES.len(),
        };
        if ids.is_empty() || ids.iter().any(|&c| c >= n) {
            return Err(QrcError::Config(format!("classes must be non-empty ids below {n}")));
        }
        if let Some(s) = self.signal.symbol_duration {
            if !(s > 0.0) {
                return Err(QrcError::Config("symbol_duration must be positive".into()));
            }
        }
        if self.samples_per_segment() == 0 {
            return Err(QrcError::Config("samples_per_segment must be positive".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the resolved config, without
    /// the output directory.
    pub fn config_hash(&self) -> String {
        let mut c = self.resolved();
        c.output_dir = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }
}
