use super::{HilbertDims, C64};
use crate::error::{QrcError, Result};

/// A pure state of the qubit register and the oscillator.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    dims: HilbertDims,
    amps: Vec<C64>,
}

/// All qubits in `g`, oscillator in vacuum.
pub fn make_vacuum(dims: HilbertDims) -> JointState {
    let mut amps = vec![C64::new(0.0, 0.0); dims.dim()];
    amps[0] = C64::new(1.0, 0.0);
    JointState { dims, amps }
}

impl JointState {
    /// Wraps an amplitude vector and normalizes it.
    pub fn from_amplitudes(dims: HilbertDims, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != dims.dim() {
            return Err(QrcError::Shape(format!("expected {} amplitudes, got {}", dims.dim(), amps.len())));
        }
        let mut s = Self { dims, amps };
        let n = s.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QrcError::Shape("state has zero or non-finite norm".into()));
        }
        s.scale(1.0 / n);
        Ok(s)
    }

    /// Product state `|qubits> (x) psi` for an oscillator vector `psi`.
    pub fn product(dims: HilbertDims, qubits: usize, psi: &[C64]) -> Result<Self> {
        if psi.len() != dims.n_fock || qubits >= dims.qubit_states() {
            return Err(QrcError::Shape("oscillator vector or qubit index out of range".into()));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dims.dim()];
        amps[qubits * dims.n_fock..(qubits + 1) * dims.n_fock].copy_from_slice(psi);
        Self::from_amplitudes(dims, amps)
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn from_raw(dims: HilbertDims, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), dims.dim());
        Self { dims, amps }
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Oscillator amplitudes attached to qubit bitstring `s`.
    pub fn block(&self, s: usize) -> &[C64] {
        let n = self.dims.n_fock;
        &self.amps[s * n..(s + 1) * n]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn scale(&mut self, f: f64) {
        for a in &mut self.amps {
            *a *= f;
        }
    }

    pub(crate) fn normalize(&mut self) {
        let n = self.norm();
        self.scale(1.0 / n);
    }

    pub fn inner(&self, other: &JointState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// |<self|other>|^2.
    pub fn fidelity(&self, other: &JointState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Photon-number distribution traced over the qubits.
    pub fn fock_populations(&self) -> Vec<f64> {
        let nf = self.dims.n_fock;
        let mut p = vec![0.0; nf];
        for (i, a) in self.amps.iter().enumerate() {
            p[i % nf] += a.norm_sqr();
        }
        p
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.fock_populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Expectation of the photon-number parity.
    pub fn parity_expectation(&self) -> f64 {
        self.fock_populations().iter().enumerate().map(|(n, p)| if n % 2 == 0 { *p } else { -*p }).sum()
    }

    /// Population of each qubit bitstring, traced over the oscillator.
    pub fn qubit_populations(&self) -> Vec<f64> {
        (0..self.dims.qubit_states()).map(|s| self.block(s).iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    /// Purity of the reduced qubit-register state.
    pub fn reduced_qubit_purity(&self) -> f64 {
        let q = self.dims.qubit_states();
        let mut purity = 0.0;
        for s in 0..q {
            for t in 0..q {
                let rho: C64 = self.block(s).iter().zip(self.block(t)).map(|(a, b)| a * b.conj()).sum();
                purity += rho.norm_sqr();
            }
        }
        purity
    }
}
