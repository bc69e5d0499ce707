use super::{ComplexSignal, LabeledExample, TaskKind};
use crate::fock::C64;
use rand::Rng;
use std::f64::consts::PI;

/// Largest spiral radius; a displacement of this size holds 0.3 photons.
pub const SPIRAL_R_MAX: f64 = 0.547_722_557_505_166_1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralOptions {
    /// Duration of one input segment; the rendered signal spans one round
    /// (two segments), one sample per segment.
    pub segment_duration: f64,
    /// Half-width of uniform jitter added to each quadrature.
    pub jitter: f64,
}

/// Point on arm `class` (0 or 1) at angle `theta` in `[pi/2, 5pi/2]`.
pub fn spiral_point(theta: f64, class: usize) -> C64 {
    let r = SPIRAL_R_MAX * (theta - PI / 2.0) / (2.0 * PI);
    C64::from_polar(r, theta + class as f64 * PI)
}

/// One point on arm `class`, rendered as a constant one-round signal.
pub fn gen_spiral_example<R: Rng + ?Sized>(class: usize, opts: &SpiralOptions, rng: &mut R) -> LabeledExample {
    let theta = rng.gen_range(PI / 2.0..=5.0 * PI / 2.0);
    let mut p = spiral_point(theta, class);
    if opts.jitter > 0.0 {
        p += C64::new(rng.gen_range(-opts.jitter..=opts.jitter), rng.gen_range(-opts.jitter..=opts.jitter));
    }
    let signal = ComplexSignal::constant(p, 2, opts.segment_duration).with_meta("spiral", 0);
    LabeledExample { signal, class_id: class, task: TaskKind::Spiral }
}

/// `n_per_class` points per arm, ordered class 0 then class 1.
pub fn gen_spiral<R: Rng + ?Sized>(n_per_class: usize, opts: &SpiralOptions, rng: &mut R) -> Vec<LabeledExample> {
    let mut out = Vec::with_capacity(2 * n_per_class);
    for class in 0..2 {
        for _ in 0..n_per_class {
            out.push(gen_spiral_example(class, opts, rng));
        }
    }
    out
}
