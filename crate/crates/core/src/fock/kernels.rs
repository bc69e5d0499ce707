//! In-place kernels on single oscillator blocks.
//!
//! While the qubits are idle the Hamiltonian is block diagonal in the qubit
//! basis, and each block is a driven harmonic oscillator with frequency
//! `omega = -chi * (number of excited qubits)`. For a constant drive over a
//! step the exact propagator has the form `exp(i phase) D(gamma) R(theta)`
//! with `R(theta) = exp(-i theta n)`. These elements compose in closed form,
//! so a whole input segment collapses to one displacement and one rotation.

use super::DenseOperator;
use super::C64;

/// `exp(i phase) D(gamma) R(theta)` acting on one oscillator block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveAffine {
    pub phase: f64,
    pub gamma: C64,
    pub theta: f64,
}

impl DriveAffine {
    pub const IDENTITY: DriveAffine = DriveAffine { phase: 0.0, gamma: C64 { re: 0.0, im: 0.0 }, theta: 0.0 };

    /// Exact propagator of `H = omega n + eps a^dag + eps^* a` over time `h`.
    pub fn step(omega: f64, eps: C64, h: f64) -> Self {
        let x = omega * h;
        let (f, g) = if x.abs() < 1e-3 {
            // (e^{-ix}-1)/x and (x - sin x)/x^2 by series
            let x2 = x * x;
            let f = C64::new(-x / 2.0 + x * x2 / 24.0, -1.0 + x2 / 6.0 - x2 * x2 / 120.0);
            let g = x / 6.0 - x * x2 / 120.0 + x * x2 * x2 / 5040.0;
            (f, g)
        } else {
            let f = (C64::from_polar(1.0, -x) - 1.0) / x;
            let g = (x - x.sin()) / (x * x);
            (f, g)
        };
        DriveAffine { phase: eps.norm_sqr() * h * h * g, gamma: eps * h * f, theta: x }
    }

    /// The element equal to applying `self` first and then `next`.
    pub fn then(self, next: DriveAffine) -> Self {
        let moved = self.gamma * C64::from_polar(1.0, -next.theta);
        DriveAffine {
            phase: self.phase + next.phase + (next.gamma * moved.conj()).im,
            gamma: next.gamma + moved,
            theta: self.theta + next.theta,
        }
    }

    /// Composes a zero-order-hold drive `scale * samples[k]`, each held for `dt`.
    pub fn from_samples(samples: &[C64], dt: f64, scale: f64, omega: f64) -> Self {
        samples.iter().fold(DriveAffine::IDENTITY, |acc, &s| acc.then(DriveAffine::step(omega, s * scale, dt)))
    }

    pub fn apply(&self, v: &mut [C64], ws: &mut Workspace) {
        apply_rotation(v, self.theta);
        ws.displace(v, self.gamma);
        if self.phase != 0.0 {
            let p = C64::from_polar(1.0, self.phase);
            for a in v.iter_mut() {
                *a *= p;
            }
        }
    }
}

/// `v <- exp(-i theta n) v`
pub fn apply_rotation(v: &mut [C64], theta: f64) {
    if theta == 0.0 {
        return;
    }
    // direct evaluation keeps the phase error flat in n
    for (n, a) in v.iter_mut().enumerate().skip(1) {
        *a *= C64::from_polar(1.0, -theta * n as f64);
    }
}

/// Scratch space and lookup tables for one worker.
#[derive(Debug, Clone)]
pub struct Workspace {
    sqrt_n: Vec<f64>,
    term: Vec<C64>,
    next: Vec<C64>,
    pub(crate) tmp: Vec<C64>,
}

const MAX_STEP: f64 = 0.5;
const MAX_TERMS: usize = 80;

impl Workspace {
    pub fn new(n_fock: usize) -> Self {
        Self {
            sqrt_n: (0..=n_fock).map(|n| (n as f64).sqrt()).collect(),
            term: vec![C64::default(); n_fock],
            next: vec![C64::default(); n_fock],
            tmp: vec![C64::default(); n_fock],
        }
    }

    /// `v <- D(gamma) v` via a truncated Taylor series of the exact truncated
    /// generator, split into steps of modulus at most 0.5.
    pub fn displace(&mut self, v: &mut [C64], gamma: C64) {
        let mag = gamma.norm();
        if mag == 0.0 {
            return;
        }
        let pieces = (mag / MAX_STEP).ceil().max(1.0) as usize;
        let g = gamma / pieces as f64;
        for _ in 0..pieces {
            self.taylor(v, g);
        }
    }

    fn taylor(&mut self, v: &mut [C64], g: C64) {
        let nf = v.len();
        let gc = g.conj();
        let scale: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if scale == 0.0 {
            return;
        }
        self.term[..nf].copy_from_slice(v);
        for k in 1..MAX_TERMS {
            let inv_k = 1.0 / k as f64;
            let t = &self.term;
            let s = &self.sqrt_n;
            let mut size = 0.0;
            for n in 0..nf {
                let mut acc = C64::default();
                if n > 0 {
                    acc += g * (s[n] * t[n - 1]);
                }
                if n + 1 < nf {
                    acc -= gc * (s[n + 1] * t[n + 1]);
                }
                acc *= inv_k;
                self.next[n] = acc;
                size += acc.norm_sqr();
            }
            std::mem::swap(&mut self.term, &mut self.next);
            for (a, b) in v.iter_mut().zip(&self.term) {
                *a += b;
            }
            if size < 1e-34 * scale {
                break;
            }
        }
    }

    /// `v <- M v` for a dense row-major `n x n` matrix.
    pub fn matvec(&mut self, m: &[C64], v: &mut [C64]) {
        let n = v.len();
        for i in 0..n {
            let row = &m[i * n..(i + 1) * n];
            self.tmp[i] = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        }
        v.copy_from_slice(&self.tmp[..n]);
    }
}

/// Row-major copy of an oscillator operator, for [`Workspace::matvec`].
pub fn row_major(op: &DenseOperator) -> Vec<C64> {
    let m = op.matrix();
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(m[(i, j)]);
        }
    }
    out
}
