use crate::error::{QrcError, Result};
use crate::features::{central_moments_real, FeatureVector, MomentFeatureSpec};
use crate::fock::C64;
use crate::reservoir::{rotation_matrix, Axis, ProtocolConfig, TrajectoryRecord};
use crate::seeding::rng_from;
use crate::signals::{ComplexSignal, TaskKind};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Mean field of the driven linear cavity, `d alpha/dt = -i eps(t)`, sampled
/// at the end of each round of the first shot window.
pub fn cavity_mean_field(signal: &ComplexSignal, cfg: &ProtocolConfig) -> Result<Vec<C64>> {
    let k = cfg.samples_per_segment(signal.dt())?;
    let per_round = 2 * k;
    let needed = per_round * cfg.rounds_per_shot;
    if signal.len() < needed {
        return Err(QrcError::SignalTooShort { needed, available: signal.len() });
    }
    let step = -C64::i() * cfg.input_scale * signal.dt();
    let mut alpha = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(cfg.rounds_per_shot);
    for (i, s) in signal.samples()[..needed].iter().enumerate() {
        alpha += step * s;
        if (i + 1) % per_round == 0 {
            out.push(alpha);
        }
    }
    Ok(out)
}

/// Samples per shot for the cavity-only reservoir, the same window as the
/// full protocol.
pub fn cavity_only_samples_per_shot(cfg: &ProtocolConfig, dt: f64) -> Result<usize> {
    Ok(cfg.samples_per_segment(dt)? * cfg.segments_per_shot())
}

/// One shot of the linear cavity alone, read out by heterodyne detection at
/// the end of every round. Each round adds the drive's displacement, the
/// measurement returns the field plus vacuum noise (variance 1/2 per
/// quadrature) and leaves the cavity in the coherent state it reported.
/// Returns `(Re, Im)` of each outcome, `2 * rounds` values.
pub fn cavity_only_shot(signal: &ComplexSignal, cfg: &ProtocolConfig, offset: usize, shot_seed: u64) -> Result<Vec<f64>> {
    let k = cfg.samples_per_segment(signal.dt())?;
    let per_round = 2 * k;
    let needed = offset + per_round * cfg.rounds_per_shot;
    if signal.len() < needed {
        return Err(QrcError::SignalTooShort { needed, available: signal.len() });
    }
    let step = -C64::i() * cfg.input_scale * signal.dt();
    let noise = Normal::new(0.0, FRAC_1_SQRT_2).expect("valid normal");
    let mut rng = rng_from(shot_seed);
    let mut alpha = C64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(2 * cfg.rounds_per_shot);
    for round in signal.samples()[offset..needed].chunks(per_round) {
        alpha += step * round.iter().sum::<C64>();
        alpha += C64::new(noise.sample(&mut rng), noise.sample(&mut rng));
        out.push(alpha.re);
        out.push(alpha.im);
    }
    Ok(out)
}

/// Central moments of cavity-only heterodyne records, over the same index
/// sets as the trajectory moments.
pub fn cavity_only_features(records: &[Vec<f64>], cfg: &ProtocolConfig, spec: &MomentFeatureSpec) -> Result<FeatureVector> {
    if spec.m != 2 * cfg.rounds_per_shot {
        return Err(QrcError::Config(format!("cavity records have {} values but spec expects {}", 2 * cfg.rounds_per_shot, spec.m)));
    }
    central_moments_real(records, spec)
}

type Qubit = [C64; 2];

fn apply2(m: &[[C64; 2]; 2], q: &mut Qubit) {
    let (g, e) = (q[0], q[1]);
    q[0] = m[0][0] * g + m[0][1] * e;
    q[1] = m[1][0] * g + m[1][1] * e;
}

/// `exp(-i h (Omega |e><g| + Omega^* |g><e|))`
fn drive_step(omega: C64, h: f64) -> [[C64; 2]; 2] {
    let r = omega.norm();
    let c = C64::new((r * h).cos(), 0.0);
    let s = if r > 0.0 { (r * h).sin() / r } else { h };
    let mi = -C64::i() * s;
    [[c, mi * omega.conj()], [mi * omega, c]]
}

/// Samples per shot for the qubit-only reservoir, which needs one round per
/// recorded bit and so twice as many segments as the full protocol.
pub fn qubit_only_samples_per_shot(cfg: &ProtocolConfig, dt: f64) -> Result<usize> {
    Ok(cfg.samples_per_segment(dt)? * 2 * cfg.m())
}

/// A bare qubit driven by the signal as its Rabi drive, using the same pulse
/// schedule per round as the full protocol (`X_{pi/2}`, segment, `X_pi`,
/// segment, `Y_{pi/2}`), measured once per round. Produces `cfg.m()` bits.
pub fn qubit_only_run(signal: &ComplexSignal, cfg: &ProtocolConfig, offset: usize, shot_seed: u64) -> Result<TrajectoryRecord> {
    let k = cfg.samples_per_segment(signal.dt())?;
    let rounds = cfg.m();
    let needed = offset + 2 * k * rounds;
    if signal.len() < needed {
        return Err(QrcError::SignalTooShort { needed, available: signal.len() });
    }
    let x_half = rotation_matrix(Axis::X, PI / 2.0);
    let x_pi = rotation_matrix(Axis::X, PI);
    let y_half = rotation_matrix(Axis::Y, PI / 2.0);
    let mut rng = rng_from(shot_seed);
    let mut q: Qubit = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut bits = Vec::with_capacity(rounds);
    let x = signal.samples();
    for r in 0..rounds {
        let start = offset + 2 * k * r;
        apply2(&x_half, &mut q);
        for (j, s) in x[start..start + 2 * k].iter().enumerate() {
            if j == k {
                apply2(&x_pi, &mut q);
            }
            apply2(&drive_step(s * cfg.input_scale, signal.dt()), &mut q);
        }
        apply2(&y_half, &mut q);
        let pe = q[1].norm_sqr() / (q[0].norm_sqr() + q[1].norm_sqr());
        let bit = u8::from(rng.gen::<f64>() < pe);
        q = if bit == 1 { [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] } else { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] };
        bits.push(bit);
    }
    Ok(TrajectoryRecord { bits, shot_seed })
}

/// Inputs for the linear classifier on raw signals: `(I, Q)` for static
/// points, otherwise the mean `(I, Q)` of each of the first
/// `segments_per_shot` segments.
pub fn raw_features(signal: &ComplexSignal, task: TaskKind, cfg: &ProtocolConfig) -> Result<Vec<f64>> {
    if task.is_static() {
        let z = signal.samples().first().ok_or(QrcError::SignalTooShort { needed: 1, available: 0 })?;
        return Ok(vec![z.re, z.im]);
    }
    let k = cfg.samples_per_segment(signal.dt())?;
    let n = cfg.segments_per_shot();
    if signal.len() < n * k {
        return Err(QrcError::SignalTooShort { needed: n * k, available: signal.len() });
    }
    Ok(signal.samples()[..n * k]
        .chunks(k)
        .flat_map(|c| {
            let m = c.iter().sum::<C64>() / k as f64;
            [m.re, m.im]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ProtocolConfig {
        let c = ProtocolConfig::default();
        let t = c.segment_duration();
        ProtocolConfig { input_scale: 1.0 / t, ..c }
    }

    #[test]
    fn heterodyne_records_are_input_free_gaussian() {
        let c = cfg();
        let z = C64::new(0.3, -0.2);
        let sig = ComplexSignal::constant(z, 8, c.segment_duration());
        let n = 20_000;
        let recs: Vec<Vec<f64>> = (0..n).map(|s| cavity_only_shot(&sig, &c, 0, s).unwrap()).collect();
        // the mean follows the noiseless field; the spread does not depend on it
        let field = cavity_mean_field(&sig, &c).unwrap();
        for (r, a) in field.iter().enumerate() {
            let mean_re = recs.iter().map(|x| x[2 * r]).sum::<f64>() / n as f64;
            let var_re = recs.iter().map(|x| (x[2 * r] - mean_re).powi(2)).sum::<f64>() / n as f64;
            let want_var = 0.5 * (r + 1) as f64;
            assert!((mean_re - a.re).abs() < 5.0 * (want_var / n as f64).sqrt());
            assert!((var_re - want_var).abs() < 0.05 * want_var, "round {r}: {var_re}");
        }
        let f = cavity_only_features(&recs, &c, &MomentFeatureSpec::default()).unwrap();
        assert_eq!(f.values.len(), 94);
    }

    #[test]
    fn mean_field_is_linear() {
        let c = cfg();
        let dt = c.segment_duration() / 4.0;
        let s1 = ComplexSignal::new((0..32).map(|k| C64::new((k as f64).sin(), 0.3)).collect(), dt).unwrap();
        let s2 = ComplexSignal::new(s1.samples().iter().map(|z| z * 2.0).collect(), dt).unwrap();
        let a = cavity_mean_field(&s1, &c).unwrap();
        let b = cavity_mean_field(&s2, &c).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert!((x * 2.0 - y).norm() < 1e-14);
        }
        // constant drive displaces by -i z per segment
        let z = C64::new(0.2, -0.1);
        let k = ComplexSignal::constant(z, 8, c.segment_duration());
        let m = cavity_mean_field(&k, &c).unwrap();
        assert!((m[3] - (-C64::i() * z * 8.0)).norm() < 1e-12);
    }

    #[test]
    fn idle_qubit_rounds_are_fair_coins() {
        // X_{pi/2} X_pi leaves g or e on the equator; Y_{pi/2} keeps it there
        let x_half = rotation_matrix(Axis::X, PI / 2.0);
        let x_pi = rotation_matrix(Axis::X, PI);
        let y_half = rotation_matrix(Axis::Y, PI / 2.0);
        for start in 0..2 {
            let mut q: Qubit = [C64::new(0.0, 0.0); 2];
            q[start] = C64::new(1.0, 0.0);
            for m in [&x_half, &x_pi, &y_half] {
                apply2(m, &mut q);
            }
            assert!((q[1].norm_sqr() - 0.5).abs() < 1e-15);
        }
        let c = cfg();
        let sig = ComplexSignal::zeros(16, c.segment_duration());
        let n = 4000;
        let ones: usize = (0..n).map(|s| qubit_only_run(&sig, &c, 0, s).unwrap().bits.iter().map(|&b| b as usize).sum::<usize>()).sum();
        let total = (n * 8) as f64;
        assert!((ones as f64 / total - 0.5).abs() < 4.0 * (0.25 / total).sqrt());
    }

    #[test]
    fn drive_step_is_unitary_rabi() {
        let om = C64::new(0.6, -0.8);
        let u = drive_step(om, 0.7);
        let mut q: Qubit = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        apply2(&u, &mut q);
        assert!((q[0].norm_sqr() + q[1].norm_sqr() - 1.0).abs() < 1e-15);
        assert!((q[1].norm_sqr() - 0.7f64.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn raw_features_shapes() {
        let c = cfg();
        let spiral = ComplexSignal::constant(C64::new(0.1, 0.2), 2, c.segment_duration());
        assert_eq!(raw_features(&spiral, TaskKind::Spiral, &c).unwrap(), vec![0.1, 0.2]);
        let dt = c.segment_duration() / 2.0;
        let s = ComplexSignal::new((0..16).map(|k| C64::new(k as f64, 0.0)).collect(), dt).unwrap();
        let f = raw_features(&s, TaskKind::FilteredNoise, &c).unwrap();
        assert_eq!(f.len(), 16);
        assert_eq!(f[0], 0.5);
        assert_eq!(f[2], 2.5);
    }
}
