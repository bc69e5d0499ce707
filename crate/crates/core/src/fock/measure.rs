use super::{DenseOperator, JointState};
use crate::error::{QrcError, Result};
use nalgebra::DMatrix;
use rand::Rng;

/// Projective measurement with Born-rule sampling. Projectors must act on the
/// state's space and sum to the identity.
pub fn measure<R: Rng + ?Sized>(state: &JointState, projectors: &[DenseOperator], rng: &mut R) -> Result<(usize, JointState)> {
    let dims = state.dims();
    if projectors.is_empty() || projectors.iter().any(|p| p.dims() != dims) {
        return Err(QrcError::Shape("projectors must act on the state's space".into()));
    }
    let mut sum = DMatrix::zeros(dims.dim(), dims.dim());
    for p in projectors {
        sum += p.matrix();
    }
    let deviation = (sum - DMatrix::identity(dims.dim(), dims.dim())).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > 1e-8 {
        return Err(QrcError::IncompleteProjectors { deviation });
    }

    let mut branches: Vec<Vec<_>> = projectors.iter().map(|p| p.apply_vec(state.amplitudes())).collect();
    let probs: Vec<f64> = branches.iter().map(|b| b.iter().map(|a| a.norm_sqr()).sum()).collect();
    let total: f64 = probs.iter().sum();
    let r = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut k = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            k = i;
            break;
        }
    }
    // Skip trailing zero-probability outcomes if rounding pushed us past them.
    while probs[k] == 0.0 && k > 0 {
        k -= 1;
    }
    let out = JointState::from_amplitudes(dims, branches.swap_remove(k))?;
    Ok((k, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displacement, make_vacuum, parity_projectors, HilbertDims, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit_projectors(dims: HilbertDims) -> Vec<DenseOperator> {
        let g = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::default(), C64::default(), C64::default()]);
        let e = DMatrix::from_row_slice(2, 2, &[C64::default(), C64::default(), C64::default(), C64::new(1.0, 0.0)]);
        vec![DenseOperator::on_qubits(&g, dims).unwrap(), DenseOperator::on_qubits(&e, dims).unwrap()]
    }

    #[test]
    fn ground_state_is_certain() {
        let dims = HilbertDims::new(4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (k, _) = measure(&make_vacuum(dims), &qubit_projectors(dims), &mut rng).unwrap();
            assert_eq!(k, 0);
        }
    }

    #[test]
    fn incomplete_set_rejected() {
        let dims = HilbertDims::new(4, 1).unwrap();
        let ps = qubit_projectors(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = measure(&make_vacuum(dims), &ps[..1], &mut rng);
        assert!(matches!(r, Err(QrcError::IncompleteProjectors { .. })));
    }

    #[test]
    fn coherent_parity_frequency() {
        let dims = HilbertDims::new(16, 1).unwrap();
        let d = displacement(C64::new(0.7, 0.0), 16).unwrap();
        let state = DenseOperator::on_oscillator(&d, dims).unwrap().apply(&make_vacuum(dims)).unwrap();
        let (pe, po) = parity_projectors(16);
        let ps = vec![DenseOperator::on_oscillator(&pe, dims).unwrap(), DenseOperator::on_oscillator(&po, dims).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let even = (0..n).filter(|_| measure(&state, &ps, &mut rng).unwrap().0 == 0).count();
        let p = (1.0 + (-2.0 * 0.49f64).exp()) / 2.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((even as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn collapse_is_normalized_and_projected() {
        let dims = HilbertDims::new(4, 1).unwrap();
        let s = JointState::from_amplitudes(dims, (0..8).map(|i| C64::new(1.0 + i as f64, 0.5)).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (k, out) = measure(&s, &qubit_projectors(dims), &mut rng).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        assert!(out.block(1 - k).iter().all(|a| a.norm() == 0.0));
    }
}
