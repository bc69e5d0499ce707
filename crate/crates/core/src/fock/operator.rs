use super::{HilbertDims, JointState, C64};
use crate::error::{QrcError, Result};
use nalgebra::{DMatrix, DVector};

/// A dense operator on a joint (or bare oscillator) space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dims: HilbertDims,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(dims: HilbertDims, matrix: DMatrix<C64>) -> Result<Self> {
        let d = dims.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(QrcError::Shape(format!("operator is {}x{}, space has dimension {d}", matrix.nrows(), matrix.ncols())));
        }
        Ok(Self { dims, matrix })
    }

    pub fn identity(dims: HilbertDims) -> Self {
        Self { dims, matrix: DMatrix::identity(dims.dim(), dims.dim()) }
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `I_qubits (x) op` for an oscillator-only operator.
    pub fn on_oscillator(op: &DenseOperator, dims: HilbertDims) -> Result<Self> {
        if op.dims.n_qubits != 0 || op.dims.n_fock != dims.n_fock {
            return Err(QrcError::Shape("expected an oscillator operator of matching n_fock".into()));
        }
        let iq = DMatrix::<C64>::identity(dims.qubit_states(), dims.qubit_states());
        Self::new(dims, iq.kronecker(&op.matrix))
    }

    /// `q (x) I_fock` for a matrix acting on the whole qubit register.
    pub fn on_qubits(q: &DMatrix<C64>, dims: HilbertDims) -> Result<Self> {
        if q.nrows() != dims.qubit_states() || q.ncols() != dims.qubit_states() {
            return Err(QrcError::Shape("qubit matrix does not match register size".into()));
        }
        let ifock = DMatrix::<C64>::identity(dims.n_fock, dims.n_fock);
        Self::new(dims, q.kronecker(&ifock))
    }

    /// Embeds a 2x2 matrix acting on qubit `k` (qubit 0 most significant).
    pub fn on_qubit(k: usize, m: &DMatrix<C64>, dims: HilbertDims) -> Result<Self> {
        if k >= dims.n_qubits || m.nrows() != 2 || m.ncols() != 2 {
            return Err(QrcError::Shape("bad single-qubit embedding".into()));
        }
        let mut full = DMatrix::<C64>::identity(1, 1);
        for j in 0..dims.n_qubits {
            let f = if j == k { m.clone() } else { DMatrix::identity(2, 2) };
            full = full.kronecker(&f);
        }
        Self::on_qubits(&full, dims)
    }

    /// Operator product `self * rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &DenseOperator) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(QrcError::Shape("cannot compose operators on different spaces".into()));
        }
        Ok(Self { dims: self.dims, matrix: &self.matrix * &rhs.matrix })
    }

    pub fn adjoint(&self) -> Self {
        Self { dims: self.dims, matrix: self.matrix.adjoint() }
    }

    /// Applies the operator without renormalizing.
    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.matrix * x).as_slice().to_vec()
    }

    /// Applies a unitary to a state. The result is normalized only up to the
    /// operator's own unitarity error.
    pub fn apply(&self, state: &JointState) -> Result<JointState> {
        if state.dims() != self.dims {
            return Err(QrcError::Shape("state and operator live on different spaces".into()));
        }
        Ok(JointState::from_raw(self.dims, self.apply_vec(state.amplitudes())))
    }

    /// max |(U^dag U - I)_ij|
    pub fn unitarity_error(&self) -> f64 {
        let p = self.matrix.adjoint() * &self.matrix;
        let d = p.nrows();
        max_abs(&(p - DMatrix::identity(d, d)))
    }

    /// max |(H - H^dag)_ij|
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// max |(self - other)_ij|
    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        max_abs(&(&self.matrix - &other.matrix))
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Truncated annihilation operator `a` on `n_fock` levels.
pub fn annihilation(n_fock: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number_operator(n_fock: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n_fock, n_fock, |i, j| if i == j { C64::new(i as f64, 0.0) } else { C64::new(0.0, 0.0) })
}

/// `D(alpha) = exp(alpha a^dag - alpha^* a)` on the truncated oscillator,
/// built by dense matrix exponentiation.
pub fn displacement(alpha: C64, n_fock: usize) -> Result<DenseOperator> {
    if 4.0 * alpha.norm_sqr() >= n_fock as f64 || n_fock < 2 {
        return Err(QrcError::TruncationRisk { alpha: alpha.norm(), n_fock });
    }
    let a = annihilation(n_fock);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    DenseOperator::new(HilbertDims::oscillator(n_fock), gen.exp())
}

/// `(P_even, P_odd)` on the bare oscillator.
pub fn parity_projectors(n_fock: usize) -> (DenseOperator, DenseOperator) {
    let proj = |odd: usize| {
        let m = DMatrix::from_fn(n_fock, n_fock, |i, j| if i == j && i % 2 == odd { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        DenseOperator { dims: HilbertDims::oscillator(n_fock), matrix: m }
    };
    (proj(0), proj(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Coherent-state Fock amplitudes, independent of any matrix exponential.
    fn coherent(alpha: C64, n_fock: usize) -> Vec<C64> {
        let mut v = Vec::with_capacity(n_fock);
        let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..n_fock {
            v.push(c);
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        v
    }

    #[test]
    fn identity_at_zero() {
        let d = displacement(C64::new(0.0, 0.0), 8).unwrap();
        assert!(d.max_abs_diff(&DenseOperator::identity(HilbertDims::oscillator(8))) < 1e-14);
    }

    #[test]
    fn vacuum_overlap_at_unit_alpha() {
        let d = displacement(C64::new(1.0, 0.0), 32).unwrap();
        assert!((d.matrix()[(0, 0)].re - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn first_column_is_coherent_state() {
        let alpha = C64::new(0.7, -0.4);
        let d = displacement(alpha, 32).unwrap();
        let want = coherent(alpha, 32);
        for n in 0..20 {
            assert!((d.matrix()[(n, 0)] - want[n]).norm() < 1e-12, "level {n}");
        }
    }

    #[test]
    fn inverse_pair() {
        let a = C64::new(0.5, 0.3);
        let p = displacement(a, 32).unwrap().compose(&displacement(-a, 32).unwrap()).unwrap();
        assert!(p.max_abs_diff(&DenseOperator::identity(HilbertDims::oscillator(32))) < 1e-9);
    }

    #[test]
    fn spiral_edge_photon_number() {
        let d = displacement(C64::new(0.3f64.sqrt(), 0.0), 32).unwrap();
        let n: f64 = (0..32).map(|k| k as f64 * d.matrix()[(k, 0)].norm_sqr()).sum();
        assert!((n - 0.3).abs() < 1e-12);
    }

    #[test]
    fn truncation_risk() {
        assert!(matches!(displacement(C64::new(3.0, 0.0), 32), Err(QrcError::TruncationRisk { .. })));
    }

    #[test]
    fn parity_projector_algebra() {
        let (pe, po) = parity_projectors(5);
        let id = DenseOperator::identity(HilbertDims::oscillator(5));
        let sum = DenseOperator { dims: pe.dims, matrix: pe.matrix() + po.matrix() };
        assert!(sum.max_abs_diff(&id) < 1e-15);
        assert_eq!(pe.matrix().trace().re, 3.0);
        assert!((pe.matrix() * po.matrix()).iter().all(|z| z.norm() == 0.0));
        assert!(pe.compose(&pe).unwrap().max_abs_diff(&pe) == 0.0);
        assert_eq!(po.matrix()[(1, 1)].re, 1.0);
        assert_eq!(po.matrix()[(0, 0)].re, 0.0);
    }

    #[test]
    fn parity_anticommutes_with_a_away_from_edge() {
        let nf = 12;
        let (pe, po) = parity_projectors(nf);
        let pi = pe.matrix() - po.matrix();
        let a = annihilation(nf);
        let ac = &pi * &a + &a * &pi;
        for i in 0..nf - 1 {
            for j in 0..nf - 1 {
                assert_eq!(ac[(i, j)].norm(), 0.0);
            }
        }
    }

    #[test]
    fn lifting_preserves_unitarity() {
        let dims = HilbertDims::new(16, 2).unwrap();
        let d = displacement(C64::new(0.2, 0.1), 16).unwrap();
        let lifted = DenseOperator::on_oscillator(&d, dims).unwrap();
        assert!(lifted.unitarity_error() < 1e-12);
    }
}
