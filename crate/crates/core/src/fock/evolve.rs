use super::{JointState, SystemParams, C64};
use crate::error::{QrcError, Result};
use crate::signals::ComplexSignal;

/// Population of the highest retained Fock level, traced over the qubits.
pub fn top_fock_population(state: &JointState) -> f64 {
    top_population(state.amplitudes(), state.dims().n_fock)
}

pub(crate) fn top_population(amps: &[C64], n_fock: usize) -> f64 {
    let mut top = 0.0;
    let mut total = 0.0;
    for (i, a) in amps.iter().enumerate() {
        let p = a.norm_sqr();
        total += p;
        if i % n_fock == n_fock - 1 {
            top += p;
        }
    }
    top / total
}

/// Integrates the rotating-frame Schrodinger equation
///
/// `H = -chi |e><e| a^dag a + eps(t) a^dag + Omega(t) |e><g| + h.c.`
///
/// with classical RK4. Both drives are zero-order holds on their sample grid,
/// which must be shared. A zero-length `qubit_drive` means no qubit drive.
/// With several qubits, the cross-Kerr term counts excited qubits and
/// `Omega` drives every qubit.
pub fn evolve(
    state: &JointState,
    drive: &ComplexSignal,
    qubit_drive: &ComplexSignal,
    params: &SystemParams,
    duration: f64,
) -> Result<JointState> {
    params.validate()?;
    let dims = state.dims();
    if dims.n_fock != params.n_fock {
        return Err(QrcError::Shape("state n_fock differs from system parameters".into()));
    }
    let dt = drive.dt();
    let n_samples = (duration / dt).round() as usize;
    if ((n_samples as f64) * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(QrcError::Config(format!("duration {duration} is not a multiple of dt {dt}")));
    }
    if drive.len() < n_samples {
        return Err(QrcError::SignalTooShort { needed: n_samples, available: drive.len() });
    }
    let qubit_on = !qubit_drive.is_empty();
    if qubit_on {
        if (qubit_drive.dt() - dt).abs() > 1e-12 * dt {
            return Err(QrcError::Config("drive and qubit drive must share a sample grid".into()));
        }
        if qubit_drive.len() < n_samples {
            return Err(QrcError::SignalTooShort { needed: n_samples, available: qubit_drive.len() });
        }
    }

    let substeps = (dt / params.integrator_dt).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let nf = dims.n_fock;
    let nq = dims.n_qubits;
    let sqrt_n: Vec<f64> = (0..nf).map(|n| (n as f64).sqrt()).collect();
    let detune: Vec<f64> = (0..dims.qubit_states()).map(|s| -params.chi * s.count_ones() as f64).collect();

    // -i H psi for constant drives
    let deriv = |psi: &[C64], out: &mut [C64], eps: C64, omega: C64| {
        for s in 0..dims.qubit_states() {
            let b = s * nf;
            for n in 0..nf {
                let mut acc = psi[b + n] * (detune[s] * n as f64);
                if n > 0 {
                    acc += eps * sqrt_n[n] * psi[b + n - 1];
                }
                if n + 1 < nf {
                    acc += eps.conj() * sqrt_n[n + 1] * psi[b + n + 1];
                }
                out[b + n] = acc;
            }
        }
        if omega != C64::new(0.0, 0.0) {
            for k in 0..nq {
                let bit = 1 << (nq - 1 - k);
                for s in 0..dims.qubit_states() {
                    if s & bit != 0 {
                        continue;
                    }
                    let (g, e) = (s * nf, (s | bit) * nf);
                    for n in 0..nf {
                        out[e + n] += omega * psi[g + n];
                        out[g + n] += omega.conj() * psi[e + n];
                    }
                }
            }
        }
        for z in out.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    };

    let dim = dims.dim();
    let mut psi = state.amplitudes().to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![C64::default(); dim],
        vec![C64::default(); dim],
        vec![C64::default(); dim],
        vec![C64::default(); dim],
        vec![C64::default(); dim],
    );
    let zero = C64::new(0.0, 0.0);
    for i in 0..n_samples {
        let eps = drive.samples()[i];
        let omega = if qubit_on { qubit_drive.samples()[i] } else { zero };
        for j in 0..substeps {
            deriv(&psi, &mut k1, eps, omega);
            for ((t, p), k) in tmp.iter_mut().zip(&psi).zip(&k1) {
                *t = p + k * (0.5 * h);
            }
            deriv(&tmp, &mut k2, eps, omega);
            for ((t, p), k) in tmp.iter_mut().zip(&psi).zip(&k2) {
                *t = p + k * (0.5 * h);
            }
            deriv(&tmp, &mut k3, eps, omega);
            for ((t, p), k) in tmp.iter_mut().zip(&psi).zip(&k3) {
                *t = p + k * h;
            }
            deriv(&tmp, &mut k4, eps, omega);
            for idx in 0..dim {
                psi[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * (h / 6.0);
            }
            let top = top_population(&psi, nf);
            if top > params.guard_threshold {
                return Err(QrcError::TruncationGuardTripped {
                    population: top,
                    threshold: params.guard_threshold,
                    time: (i * substeps + j + 1) as f64 * h,
                });
            }
        }
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let drift = (norm - 1.0).abs();
    if drift >= 1e-6 {
        return Err(QrcError::IntegratorDrift { drift });
    }
    let mut out = JointState::from_raw(dims, psi);
    out.normalize();
    Ok(out)
}
