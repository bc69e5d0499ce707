//! Closed-form predictions used to validate the Monte-Carlo engine.

use super::{multiqubit_conditional_displacement, MultiQubitGrid, ProtocolConfig};
use crate::error::{QrcError, Result};
use crate::fock::{displacement, evolve, parity_projectors, HilbertDims, JointState, C64};
use crate::signals::ComplexSignal;
use nalgebra::DMatrix;
use std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitPrior {
    G,
    E,
}

/// Probability of measuring `e` after one round whose segments each displace
/// the ground branch by `beta`, given the qubit started in `prior`.
///
/// The loop area is `A = i (alpha beta^* - alpha^* beta) = -2 Im(alpha beta^*)`,
/// and `P(e|g) = cos^2(A - pi/4)`, `P(e|e) = sin^2(A - pi/4)`.
pub fn geometric_phase_oracle(alpha: C64, beta: C64, prior: QubitPrior) -> f64 {
    let area = -2.0 * (alpha * beta.conj()).im;
    match prior {
        QubitPrior::G => (area - FRAC_PI_4).cos().powi(2),
        QubitPrior::E => (area - FRAC_PI_4).sin().powi(2),
    }
}

/// Distribution of `m` parity outcomes when each round displaces the
/// oscillator by `beta` and then measures parity, starting from vacuum.
///
/// Each round contributes a factor `1/2 + s_i (D(2 beta) + D(-2 beta)) / 4`
/// with `s_i = (-1)^(x_i xor x_{i-1})` and `x_0 = 0`. All displacements are
/// collinear, so the product is a Laurent polynomial in `D(2 beta)` whose
/// vacuum expectation follows from `<0|D(2k beta)|0> = exp(-2 k^2 |beta|^2)`.
/// Index `code` has the first outcome as its most significant bit.
pub fn parity_trajectory_oracle(beta: C64, m: usize) -> Result<Vec<f64>> {
    if m == 0 || m > 12 {
        return Err(QrcError::Config(format!("parity oracle supports 1 <= M <= 12, got {m}")));
    }
    let b2 = beta.norm_sqr();
    let overlap: Vec<f64> = (0..=m).map(|k| (-2.0 * (k * k) as f64 * b2).exp()).collect();
    let mut table = vec![0.0; 1 << m];
    // coefficient of D(2 k beta) stored at index k + m
    let mut poly = vec![0.0; 2 * m + 1];
    let mut next = vec![0.0; 2 * m + 1];
    for (code, slot) in table.iter_mut().enumerate() {
        poly.iter_mut().for_each(|c| *c = 0.0);
        poly[m] = 1.0;
        let mut prev = 0;
        for i in 0..m {
            let x = (code >> (m - 1 - i)) & 1;
            let s = if x ^ prev == 0 { 0.25 } else { -0.25 };
            prev = x;
            next.iter_mut().for_each(|c| *c = 0.0);
            for k in 0..=2 * m {
                let c = poly[k];
                if c == 0.0 {
                    continue;
                }
                next[k] += 0.5 * c;
                if k < 2 * m {
                    next[k + 1] += s * c;
                }
                if k >= 1 {
                    next[k - 1] += s * c;
                }
            }
            std::mem::swap(&mut poly, &mut next);
        }
        *slot = poly.iter().enumerate().map(|(k, c)| c * overlap[(k as i64 - m as i64).unsigned_abs() as usize]).sum();
    }
    Ok(table)
}

/// Numerical rank of the matrix of trajectory probabilities over a grid of
/// displacement magnitudes (singular values above `1e-9` times the largest).
pub fn function_space_rank(m: usize, beta_grid: &[f64]) -> Result<usize> {
    if beta_grid.len() < m + 1 {
        return Err(QrcError::Config("grid too small to resolve the rank".into()));
    }
    let cols: Vec<Vec<f64>> = beta_grid.iter().map(|&b| parity_trajectory_oracle(C64::new(b, 0.0), m)).collect::<Result<_>>()?;
    let mat = DMatrix::from_fn(1 << m, beta_grid.len(), |i, j| cols[j][i]);
    let sv = mat.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    Ok(sv.iter().filter(|&&s| s > 1e-9 * top).count())
}

/// Prepares `(|g> + |e>)/sqrt 2 (x) |0>`, displaces the oscillator by `+alpha`
/// or `-alpha` conditioned on the qubit, lets it evolve freely for `delay`
/// and undoes the conditional displacement. Returns the oscillator's vacuum
/// population. The excited branch rotates at `chi`, so the undo is perfect
/// again after a full period `2 pi / chi`.
pub fn kerr_revival_check(alpha: C64, cfg: &ProtocolConfig, delay: f64) -> Result<f64> {
    let dims = HilbertDims::new(cfg.system.n_fock, 1)?;
    let nf = dims.n_fock;
    let mut amps = vec![C64::default(); dims.dim()];
    amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[nf] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let start = JointState::from_amplitudes(dims, amps)?;
    let cd = multiqubit_conditional_displacement(&MultiQubitGrid::new(1, vec![alpha, -alpha])?, dims)?;
    let undo = multiqubit_conditional_displacement(&MultiQubitGrid::new(1, vec![-alpha, alpha])?, dims)?;
    let mut state = cd.apply(&start)?;
    if delay > 0.0 {
        let n = (delay / cfg.system.integrator_dt).ceil().max(1.0) as usize;
        let zero = ComplexSignal::zeros(n, delay / n as f64);
        state = evolve(&state, &zero, &ComplexSignal::empty(), &cfg.system, delay)?;
    }
    let out = undo.apply(&state)?;
    Ok(out.amplitudes()[0].norm_sqr() + out.amplitudes()[nf].norm_sqr())
}

/// Brute-force version of [`parity_trajectory_oracle`]: the squared norm of
/// `P_{x_M} D(beta) ... P_{x_1} D(beta) |0>` in a Fock space of `n_fock`
/// levels, for every outcome string.
pub fn parity_projector_chain(beta: C64, m: usize, n_fock: usize) -> Result<Vec<f64>> {
    if m == 0 || m > 16 {
        return Err(QrcError::Config(format!("projector chain needs 1..=16 rounds, got {m}")));
    }
    let d = displacement(beta, n_fock)?;
    let (pe, po) = parity_projectors(n_fock);
    let mut table = vec![0.0; 1 << m];
    for (code, slot) in table.iter_mut().enumerate() {
        let mut v = vec![C64::default(); n_fock];
        v[0] = C64::new(1.0, 0.0);
        for i in 0..m {
            v = d.apply_vec(&v);
            let p = if (code >> (m - 1 - i)) & 1 == 0 { &pe } else { &po };
            v = p.apply_vec(&v);
        }
        *slot = v.iter().map(|a| a.norm_sqr()).sum();
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_round_is_coherent_parity() {
        for b in [0.0, 0.3, 0.8] {
            let t = parity_trajectory_oracle(C64::new(0.0, b), 1).unwrap();
            assert!((t[0] - (1.0 + (-2.0 * b * b).exp()) / 2.0).abs() < 1e-15);
        }
        let t = parity_trajectory_oracle(C64::new(0.0, 0.0), 1).unwrap();
        assert_eq!(t, vec![1.0, 0.0]);
    }

    #[test]
    fn matches_projector_chain() {
        for (m, beta) in [(2, C64::new(0.4, 0.0)), (4, C64::new(0.1, 0.39)), (6, C64::new(-0.25, 0.2))] {
            let want = parity_projector_chain(beta, m, 48).unwrap();
            let got = parity_trajectory_oracle(beta, m).unwrap();
            let err = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "m={m} err={err}");
        }
    }

    #[test]
    fn normalized() {
        for m in 1..=8 {
            let t = parity_trajectory_oracle(C64::new(0.37, -0.21), m).unwrap();
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_is_m_plus_one() {
        let grid: Vec<f64> = (0..32).map(|i| i as f64 / 31.0).collect();
        for m in [1, 2, 4] {
            assert_eq!(function_space_rank(m, &grid).unwrap(), m + 1);
        }
    }

    #[test]
    fn geometric_phase_identities() {
        let a = C64::new(0.5, 0.0);
        assert!((geometric_phase_oracle(a, C64::new(0.3, 0.0), QubitPrior::G) - 0.5).abs() < 1e-15);
        for k in 0..12 {
            let b = C64::from_polar(0.25, k as f64 * 0.5);
            let s = geometric_phase_oracle(a, b, QubitPrior::G) + geometric_phase_oracle(a, b, QubitPrior::E);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn kerr_revival() {
        let cfg = ProtocolConfig::default();
        let a = C64::new(0.5, 0.0);
        let period = cfg.system.revival_period();
        assert!((kerr_revival_check(a, &cfg, 0.0).unwrap() - 1.0).abs() < 1e-9);
        let half = kerr_revival_check(a, &cfg, period / 2.0).unwrap();
        let full = kerr_revival_check(a, &cfg, period).unwrap();
        assert!(full > 0.99, "{full}");
        assert!(half < 1.0 - 1e-3);
        // the excited branch ends displaced by 2 alpha
        assert!((half - 0.5 * (1.0 + (-4.0f64 * 0.25).exp())).abs() < 1e-6);
    }
}
