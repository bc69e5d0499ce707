use thiserror::Error;

/// Every failure the library can report.
///
/// The CLI maps these onto exit codes with [`QrcError::exit_code`].
#[derive(Debug, Error)]
pub enum QrcError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("displacement |alpha|={alpha:.4} too large for n_fock={n_fock} (need 4|alpha|^2 < n_fock)")]
    TruncationRisk { alpha: f64, n_fock: usize },

    #[error("top Fock level population {population:.3e} exceeds guard threshold {threshold:.3e} at t={time:.4} us")]
    TruncationGuardTripped { population: f64, threshold: f64, time: f64 },

    #[error("integrator norm drift {drift:.3e} exceeds tolerance")]
    IntegratorDrift { drift: f64 },

    #[error("projectors do not resolve the identity (max deviation {deviation:.3e})")]
    IncompleteProjectors { deviation: f64 },

    #[error("signal too short: need {needed} samples, have {available}")]
    SignalTooShort { needed: usize, available: usize },

    #[error("unknown modulation scheme id {0}")]
    UnknownScheme(usize),

    #[error("need at least 2 shots for central moments, got {0}")]
    TooFewShots(usize),

    #[error("ridge system could not be factorized")]
    SingularSystem,

    #[error("softmax training diverged at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("reservoir weight matrix is identically zero")]
    DegenerateReservoir,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("oracle check failed: {0}")]
    ValidationFailed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {msg}")]
    Format { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, QrcError>;

impl QrcError {
    /// Process exit code: 1 for configuration problems, 2 for simulation
    /// or validation failures, 3 for file-system problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            QrcError::Config(_) | QrcError::UnknownScheme(_) => 1,
            QrcError::Io { .. } | QrcError::Format { .. } => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        QrcError::Io { path: path.as_ref().display().to_string(), source }
    }
}
