use super::{ComplexSignal, LabeledExample, TaskKind};
use crate::error::{QrcError, Result};
use crate::fock::C64;
use rand::Rng;
use std::f64::consts::PI;

pub const N_SCHEMES: usize = 10;

const NAMES: [&str; N_SCHEMES] = ["OOK", "4ASK", "BPSK", "QPSK", "8PSK", "16PSK", "16QAM", "32QAM", "64QAM", "128QAM"];

pub fn scheme_name(id: usize) -> Result<&'static str> {
    NAMES.get(id).copied().ok_or(QrcError::UnknownScheme(id))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationOptions {
    pub symbol_duration: f64,
    /// Sample spacing of the rendered envelope.
    pub dt: f64,
}

fn psk(m: usize, offset: f64) -> Vec<C64> {
    (0..m).map(|k| C64::from_polar(1.0, offset + 2.0 * PI * k as f64 / m as f64)).collect()
}

/// Square grid with odd coordinates `+-1, +-3, ...`, optionally dropping
/// `corner x corner` blocks from each corner (cross constellations).
fn qam(side: usize, corner: usize) -> Vec<C64> {
    let mut pts = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let in_corner = |k: usize| k < corner || k >= side - corner;
            if corner > 0 && in_corner(i) && in_corner(j) {
                continue;
            }
            let x = 2.0 * i as f64 - (side as f64 - 1.0);
            let y = 2.0 * j as f64 - (side as f64 - 1.0);
            pts.push(C64::new(x, y));
        }
    }
    pts
}

/// Unit-average-power constellation of scheme `id`.
pub fn constellation(id: usize) -> Result<Vec<C64>> {
    let raw = match id {
        0 => vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        1 => [-3.0, -1.0, 1.0, 3.0].iter().map(|&x| C64::new(x, 0.0)).collect(),
        2 => psk(2, 0.0),
        3 => psk(4, PI / 4.0),
        4 => psk(8, 0.0),
        5 => psk(16, 0.0),
        6 => qam(4, 0),
        7 => qam(6, 1),
        8 => qam(8, 0),
        9 => qam(12, 2),
        _ => return Err(QrcError::UnknownScheme(id)),
    };
    let power = raw.iter().map(|z| z.norm_sqr()).sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|z| z / power.sqrt()).collect())
}

/// `n_symbols` i.i.d. uniform symbols rendered as rectangular pulses.
/// Sample `i` takes the symbol active at its midpoint.
pub fn gen_modulated<R: Rng + ?Sized>(scheme_id: usize, n_symbols: usize, opts: &ModulationOptions, rng: &mut R) -> Result<LabeledExample> {
    let points = constellation(scheme_id)?;
    if !n_symbols.is_multiple_of(8) {
        return Err(QrcError::Config(format!("n_symbols must be a multiple of 8, got {n_symbols}")));
    }
    let symbols: Vec<C64> = (0..n_symbols).map(|_| points[rng.gen_range(0..points.len())]).collect();
    let n_samples = (n_symbols as f64 * opts.symbol_duration / opts.dt).round() as usize;
    let samples = (0..n_samples)
        .map(|i| {
            let k = (((i as f64 + 0.5) * opts.dt) / opts.symbol_duration) as usize;
            symbols[k.min(n_symbols - 1)]
        })
        .collect();
    let signal = ComplexSignal::new(samples, opts.dt)?.with_meta(NAMES[scheme_id], 0);
    Ok(LabeledExample { signal, class_id: scheme_id, task: TaskKind::Modulation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sizes_and_power() {
        let sizes = [2, 4, 2, 4, 8, 16, 16, 32, 64, 128];
        for (id, &n) in sizes.iter().enumerate() {
            let c = constellation(id).unwrap();
            assert_eq!(c.len(), n, "{}", NAMES[id]);
            let p = c.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            assert!((p - 1.0).abs() < 1e-12);
            for i in 0..n {
                for j in 0..i {
                    assert!((c[i] - c[j]).norm() > 1e-6, "duplicate point in {}", NAMES[id]);
                }
            }
        }
    }

    #[test]
    fn bpsk_is_antipodal() {
        let c = constellation(2).unwrap();
        assert!((c[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((c[1] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn unknown_scheme() {
        let opts = ModulationOptions { symbol_duration: 0.5, dt: 0.5 };
        let r = gen_modulated(10, 8, &opts, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(QrcError::UnknownScheme(10))));
    }

    #[test]
    fn rendering_holds_symbols() {
        let opts = ModulationOptions { symbol_duration: 0.5, dt: 0.05 };
        let ex = gen_modulated(3, 16, &opts, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let s = ex.signal.samples();
        assert_eq!(s.len(), 160);
        for k in 0..16 {
            assert!(s[k * 10..(k + 1) * 10].iter().all(|z| *z == s[k * 10]));
        }
    }

    #[test]
    fn mean_power_near_one() {
        let opts = ModulationOptions { symbol_duration: 0.5, dt: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for id in 0..N_SCHEMES {
            let ex = gen_modulated(id, 2048, &opts, &mut rng).unwrap();
            assert!((ex.signal.mean_power() - 1.0).abs() < 0.1, "{}", NAMES[id]);
        }
    }

    #[test]
    fn symbol_counts_uniform() {
        // chi-squared with 15 dof; 30.58 is the 0.01 upper quantile
        let opts = ModulationOptions { symbol_duration: 1.0, dt: 1.0 };
        let ex = gen_modulated(5, 10_000, &opts, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let c = constellation(5).unwrap();
        let mut counts = [0usize; 16];
        for z in ex.signal.samples() {
            let k = c.iter().position(|p| (p - z).norm() < 1e-12).unwrap();
            counts[k] += 1;
        }
        let e = 10_000.0 / 16.0;
        let chi2: f64 = counts.iter().map(|&n| (n as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 30.58, "chi2 = {chi2}");
    }
}
