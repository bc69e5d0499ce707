use super::{ComplexSignal, LabeledExample, TaskKind};
use crate::error::{QrcError, Result};
use crate::fock::C64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    Gaussian,
    Lorentzian,
    InversePower,
}

/// The six classes of the noise task as (shape, width in us). Classes 0-2
/// form the 50 ns subtask, 3-5 the 600 ns subtask.
pub const NOISE_CLASSES: [(KernelShape, f64); 6] = [
    (KernelShape::Gaussian, 0.05),
    (KernelShape::Lorentzian, 0.05),
    (KernelShape::InversePower, 0.05),
    (KernelShape::Gaussian, 0.6),
    (KernelShape::Lorentzian, 0.6),
    (KernelShape::InversePower, 0.6),
];

/// Symmetric FIR filter with unit DC gain, `sum(taps) * dt = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterKernel {
    pub shape: KernelShape,
    pub width: f64,
    pub dt: f64,
    /// Values at `t = (j - half) dt` for `j in 0..2 half + 1`.
    pub taps: Vec<f64>,
}

impl FilterKernel {
    pub fn half_len(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn dc_gain(&self) -> f64 {
        self.taps.iter().sum::<f64>() * self.dt
    }
}

/// Samples `shape` on `[-5 width, 5 width]` and normalizes its DC gain.
pub fn kernel_table(shape: KernelShape, width: f64, dt: f64) -> Result<FilterKernel> {
    if !(width > 0.0) || !(dt > 0.0) {
        return Err(QrcError::Config("kernel width and dt must be positive".into()));
    }
    let half = (5.0 * width / dt + 1e-9).floor() as usize;
    let f = |t: f64| -> f64 {
        let x = t / width;
        match shape {
            KernelShape::Gaussian => (-0.5 * x * x).exp(),
            KernelShape::Lorentzian => 1.0 / (1.0 + x * x),
            KernelShape::InversePower => 1.0 / (1.0 + x.abs()),
        }
    };
    // Evaluate on |j| so both halves are bitwise identical.
    let mut taps: Vec<f64> = (0..=2 * half).map(|j| f((j as i64 - half as i64).unsigned_abs() as f64 * dt)).collect();
    let gain = taps.iter().sum::<f64>() * dt;
    taps.iter_mut().for_each(|k| *k /= gain);
    Ok(FilterKernel { shape, width, dt, taps })
}

/// `n` samples of white noise (I and Q uniform on [-1, 1]) filtered by `kernel`.
/// Only fully overlapped convolution outputs are kept, so there is no
/// start-up transient.
pub fn filtered_noise<R: Rng + ?Sized>(kernel: &FilterKernel, n: usize, rng: &mut R) -> ComplexSignal {
    let l = kernel.taps.len();
    let m = n + l - 1;
    let size = (m + l - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut white = vec![C64::default(); size];
    for w in white.iter_mut().take(m) {
        *w = C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
    }
    let mut k = vec![C64::default(); size];
    for (dst, &t) in k.iter_mut().zip(&kernel.taps) {
        *dst = C64::new(t * kernel.dt, 0.0);
    }
    fwd.process(&mut white);
    fwd.process(&mut k);
    for (a, b) in white.iter_mut().zip(&k) {
        *a *= b;
    }
    inv.process(&mut white);
    let norm = 1.0 / size as f64;
    let samples = white[l - 1..l - 1 + n].iter().map(|z| z * norm).collect();
    ComplexSignal { samples, dt: kernel.dt, meta: Default::default() }
}

/// A noise realization of class `class_id` (index into [`NOISE_CLASSES`]).
pub fn gen_filtered_noise<R: Rng + ?Sized>(class_id: usize, n: usize, dt: f64, rng: &mut R) -> Result<LabeledExample> {
    let &(shape, width) = NOISE_CLASSES.get(class_id).ok_or_else(|| QrcError::Config(format!("noise class {class_id} out of range")))?;
    let kernel = kernel_table(shape, width, dt)?;
    let signal = filtered_noise(&kernel, n, rng).with_meta(format!("{shape:?}-{width}"), 0);
    Ok(LabeledExample { signal, class_id, task: TaskKind::FilteredNoise })
}
