//! Truncated Fock-space substrate for one oscillator coupled to a register
//! of two-level qubits.
//!
//! Basis ordering is qubit-index major, Fock minor: amplitude
//! `s * n_fock + n` belongs to qubit bitstring `s` and photon number `n`.
//! Qubit 0 is the most significant bit of `s`, and a set bit means the
//! qubit is excited.
//!
//! Units are microseconds and rad/us throughout.

pub(crate) mod evolve;
pub mod kernels;
mod measure;
mod operator;
mod state;

pub use evolve::{evolve, top_fock_population};
pub use measure::measure;
pub use operator::{annihilation, displacement, number_operator, parity_projectors, DenseOperator};
pub use state::{make_vacuum, JointState};

use crate::error::{QrcError, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Size of the truncated joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertDims {
    pub n_fock: usize,
    pub n_qubits: usize,
}

impl HilbertDims {
    pub fn new(n_fock: usize, n_qubits: usize) -> Result<Self> {
        if n_fock < 2 {
            return Err(QrcError::Config(format!("n_fock must be >= 2, got {n_fock}")));
        }
        if n_qubits == 0 || n_qubits > 8 {
            return Err(QrcError::Config(format!("n_qubits must be in 1..=8, got {n_qubits}")));
        }
        Ok(Self { n_fock, n_qubits })
    }

    /// The bare oscillator factor, with no qubits attached. Operators on
    /// this space can be lifted with [`DenseOperator::on_oscillator`].
    pub fn oscillator(n_fock: usize) -> Self {
        Self { n_fock, n_qubits: 0 }
    }

    pub fn qubit_states(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_states() * self.n_fock
    }

    pub fn index(&self, qubits: usize, n: usize) -> usize {
        qubits * self.n_fock + n
    }
}

impl Default for HilbertDims {
    fn default() -> Self {
        Self { n_fock: 32, n_qubits: 1 }
    }
}

/// Physical constants of the rotating-frame model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cross-Kerr shift in rad/us.
    pub chi: f64,
    pub n_fock: usize,
    /// Largest tolerated population of the top Fock level.
    pub guard_threshold: f64,
    /// Maximum Runge-Kutta step in us.
    pub integrator_dt: f64,
}

impl SystemParams {
    /// Builds parameters from a cross-Kerr shift given in MHz (cycles/us).
    pub fn from_mhz(chi_mhz: f64, n_fock: usize) -> Result<Self> {
        let p = Self { chi: 2.0 * std::f64::consts::PI * chi_mhz, n_fock, ..Self::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(QrcError::Config(format!("chi must be positive, got {}", self.chi)));
        }
        if !(self.guard_threshold > 0.0 && self.guard_threshold < 1.0) {
            return Err(QrcError::Config(format!("guard_threshold must be in (0,1), got {}", self.guard_threshold)));
        }
        if !(self.integrator_dt > 0.0) {
            return Err(QrcError::Config("integrator_dt must be positive".into()));
        }
        if self.n_fock < 2 {
            return Err(QrcError::Config("n_fock must be >= 2".into()));
        }
        Ok(())
    }

    /// Free-evolution period after which the excited branch returns to its
    /// starting point in phase space.
    pub fn revival_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.chi
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { chi: 2.0 * std::f64::consts::PI * 2.415, n_fock: 32, guard_threshold: 0.01, integrator_dt: 1e-3 }
    }
}
