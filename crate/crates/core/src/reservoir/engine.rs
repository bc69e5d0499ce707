use super::{rotation_matrix, Axis, GateSchedule, Propagator, ProtocolConfig, QubitCarry, TrajectoryRecord};
use crate::error::{QrcError, Result};
use crate::fock::kernels::{row_major, DriveAffine, Workspace};
use crate::fock::{displacement, evolve, HilbertDims, JointState, C64};
use crate::seeding::rng_from;
use crate::signals::ComplexSignal;
use rand::Rng;
use std::f64::consts::PI;

/// Conditional probabilities below this are dropped when enumerating
/// outcome trees; the table is renormalized afterwards.
const BRANCH_CUTOFF: f64 = 1e-14;

/// Protocol engine with precomputed gate matrices. Cheap to share across
/// threads; each worker brings its own [`Workspace`].
#[derive(Debug, Clone)]
pub struct Reservoir {
    cfg: ProtocolConfig,
    dims: HilbertDims,
    /// Row-major `D(+alpha_k)` and `D(-alpha_k)` per entry of `alpha_phases`.
    disp_plus: Vec<Vec<C64>>,
    disp_minus: Vec<Vec<C64>>,
    /// Row-major `D(grid[s])` for multi-qubit registers.
    grid_ops: Vec<Vec<C64>>,
    /// Free-evolution frequency of each qubit block.
    omegas: Vec<f64>,
}

impl Reservoir {
    pub fn new(cfg: ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.gates == GateSchedule::DisplacementOnly && cfg.carry == QubitCarry::ParityOutcome {
            return Err(QrcError::Config("displacement-only rounds need reset or qubit-outcome carry".into()));
        }
        let dims = cfg.dims();
        let nf = dims.n_fock;
        let mut disp_plus = Vec::new();
        let mut disp_minus = Vec::new();
        for k in 0..cfg.alpha_phases.len() {
            let a = cfg.alpha_for_round(k);
            disp_plus.push(row_major(&displacement(a, nf)?));
            disp_minus.push(row_major(&displacement(-a, nf)?));
        }
        let grid_ops = match &cfg.grid {
            Some(g) if g.n_qubits > 1 => {
                g.displacement_map.iter().map(|&a| displacement(a, nf).map(|d| row_major(&d))).collect::<Result<_>>()?
            }
            _ => Vec::new(),
        };
        let omegas = (0..dims.qubit_states()).map(|s| -cfg.system.chi * s.count_ones() as f64).collect();
        Ok(Self { cfg, dims, disp_plus, disp_minus, grid_ops, omegas })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn dims(&self) -> HilbertDims {
        self.dims
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.dims.n_fock)
    }

    /// Samples per input segment for a signal sampled at `dt`.
    pub fn samples_per_segment(&self, dt: f64) -> Result<usize> {
        self.cfg.samples_per_segment(dt)
    }

    /// Samples one shot needs.
    pub fn samples_per_shot(&self, dt: f64) -> Result<usize> {
        Ok(self.samples_per_segment(dt)? * self.cfg.segments_per_shot())
    }

    fn guard(&self, amps: &[C64], time: f64) -> Result<()> {
        let top = crate::fock::evolve::top_population(amps, self.dims.n_fock);
        if top > self.cfg.system.guard_threshold {
            return Err(QrcError::TruncationGuardTripped { population: top, threshold: self.cfg.system.guard_threshold, time });
        }
        Ok(())
    }

    /// Per-block propagators for one segment (exact propagation only).
    fn segment_affines(&self, seg: &[C64], dt: f64) -> Vec<DriveAffine> {
        self.omegas.iter().map(|&w| DriveAffine::from_samples(seg, dt, self.cfg.input_scale, w)).collect()
    }

    fn apply_segment(&self, amps: &mut [C64], seg: &[C64], affines: Option<&[DriveAffine]>, dt: f64, ws: &mut Workspace) -> Result<()> {
        let nf = self.dims.n_fock;
        match self.cfg.propagator {
            Propagator::Exact => {
                let owned;
                let aff = match affines {
                    Some(a) => a,
                    None => {
                        owned = self.segment_affines(seg, dt);
                        &owned
                    }
                };
                for (s, a) in aff.iter().enumerate() {
                    a.apply(&mut amps[s * nf..(s + 1) * nf], ws);
                }
            }
            Propagator::Rk4 => {
                let scaled: Vec<C64> = seg.iter().map(|z| z * self.cfg.input_scale).collect();
                let drive = ComplexSignal::new(scaled, dt)?;
                let state = JointState::from_raw(self.dims, amps.to_vec());
                let out = evolve(&state, &drive, &ComplexSignal::empty(), &self.cfg.system, drive.duration())?;
                amps.copy_from_slice(out.amplitudes());
            }
        }
        Ok(())
    }

    /// Applies the same single-qubit rotation to every qubit.
    fn rotate_all(&self, amps: &mut [C64], axis: Axis, angle: f64) {
        let m = rotation_matrix(axis, angle);
        let nf = self.dims.n_fock;
        let nq = self.dims.n_qubits;
        for k in 0..nq {
            let bit = 1 << (nq - 1 - k);
            for s in 0..self.dims.qubit_states() {
                if s & bit != 0 {
                    continue;
                }
                let (g, e) = (s * nf, (s | bit) * nf);
                for n in 0..nf {
                    let (a, b) = (amps[g + n], amps[e + n]);
                    amps[g + n] = m[0][0] * a + m[0][1] * b;
                    amps[e + n] = m[1][0] * a + m[1][1] * b;
                }
            }
        }
    }

    /// CNOD for one qubit (`inverse` flips the sign of alpha), or the grid
    /// conditional displacement for larger registers.
    fn entangle(&self, amps: &mut [C64], round: usize, inverse: bool, ws: &mut Workspace) {
        let nf = self.dims.n_fock;
        if self.dims.n_qubits == 1 {
            let k = round % self.disp_plus.len();
            let (to_g, to_e) = if inverse { (&self.disp_minus[k], &self.disp_plus[k]) } else { (&self.disp_plus[k], &self.disp_minus[k]) };
            let (g, e) = amps.split_at_mut(nf);
            g.swap_with_slice(e);
            // g now holds the old e amplitudes and vice versa
            ws.matvec(to_g, g);
            ws.matvec(to_e, e);
        } else {
            for (s, op) in self.grid_ops.iter().enumerate() {
                ws.matvec(op, &mut amps[s * nf..(s + 1) * nf]);
            }
        }
    }

    /// U1 through U7 of round `round`.
    #[allow(clippy::too_many_arguments)]
    fn round_unitary(
        &self,
        amps: &mut [C64],
        round: usize,
        seg_a: &[C64],
        seg_b: &[C64],
        affines: Option<(&[DriveAffine], &[DriveAffine])>,
        dt: f64,
        ws: &mut Workspace,
    ) -> Result<()> {
        let full = self.cfg.gates == GateSchedule::Full;
        let t0 = 2.0 * round as f64 * self.cfg.segment_duration();
        if full {
            self.rotate_all(amps, Axis::X, PI / 2.0);
            self.entangle(amps, round, false, ws);
        }
        self.apply_segment(amps, seg_a, affines.map(|a| a.0), dt, ws)?;
        self.guard(amps, t0 + self.cfg.segment_duration())?;
        if full {
            self.rotate_all(amps, Axis::X, PI);
        }
        self.apply_segment(amps, seg_b, affines.map(|a| a.1), dt, ws)?;
        self.guard(amps, t0 + 2.0 * self.cfg.segment_duration())?;
        if full {
            self.entangle(amps, round, true, ws);
            self.rotate_all(amps, Axis::Y, PI / 2.0);
        }
        Ok(())
    }

    /// Probability of each qubit bitstring, and of odd parity within it.
    fn outcome_weights(&self, amps: &[C64]) -> Vec<(f64, f64)> {
        let nf = self.dims.n_fock;
        (0..self.dims.qubit_states())
            .map(|s| {
                let blk = &amps[s * nf..(s + 1) * nf];
                let mut even = 0.0;
                let mut odd = 0.0;
                for (n, a) in blk.iter().enumerate() {
                    if n % 2 == 0 {
                        even += a.norm_sqr();
                    } else {
                        odd += a.norm_sqr();
                    }
                }
                (even, odd)
            })
            .collect()
    }

    /// Keeps only block `s` with parity `p`, normalizes it and moves it to the
    /// block given by the carry-over rule.
    fn collapse(&self, amps: &mut [C64], s: usize, p: usize, weight: f64) {
        let nf = self.dims.n_fock;
        let target = match self.cfg.carry {
            QubitCarry::ParityOutcome => p,
            QubitCarry::QubitOutcome => s,
            QubitCarry::Reset => 0,
        };
        let inv = 1.0 / weight.sqrt();
        for t in 0..self.dims.qubit_states() {
            if t == s {
                continue;
            }
            amps[t * nf..(t + 1) * nf].iter_mut().for_each(|a| *a = C64::default());
        }
        for (n, a) in amps[s * nf..(s + 1) * nf].iter_mut().enumerate() {
            *a = if n % 2 == p { *a * inv } else { C64::default() };
        }
        if target != s {
            let (lo, hi) = (s.min(target), s.max(target));
            let (left, right) = amps.split_at_mut(hi * nf);
            left[lo * nf..(lo + 1) * nf].swap_with_slice(&mut right[..nf]);
        }
    }

    fn push_bits(&self, s: usize, p: usize, bits: &mut Vec<u8>) {
        let nq = self.dims.n_qubits;
        for k in 0..nq {
            bits.push(((s >> (nq - 1 - k)) & 1) as u8);
        }
        bits.push(p as u8);
    }

    /// Samples the qubit register, then parity, and applies the carry rule.
    fn measure<R: Rng + ?Sized>(&self, amps: &mut [C64], rng: &mut R, bits: &mut Vec<u8>) {
        let w = self.outcome_weights(amps);
        let total: f64 = w.iter().map(|(e, o)| e + o).sum();
        let r = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut s = w.len() - 1;
        for (i, (e, o)) in w.iter().enumerate() {
            acc += e + o;
            if r < acc {
                s = i;
                break;
            }
        }
        while w[s].0 + w[s].1 == 0.0 && s > 0 {
            s -= 1;
        }
        let (even, odd) = w[s];
        let p = usize::from(rng.gen::<f64>() * (even + odd) >= even);
        let weight = if p == 0 { even } else { odd };
        self.collapse(amps, s, p, weight);
        self.push_bits(s, p, bits);
    }

    /// Full round: unitary, measurements, carry-over.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn round<R: Rng + ?Sized>(
        &self,
        amps: &mut [C64],
        round: usize,
        seg_a: &[C64],
        seg_b: &[C64],
        dt: f64,
        ws: &mut Workspace,
        rng: &mut R,
        bits: &mut Vec<u8>,
    ) -> Result<()> {
        self.round_unitary(amps, round, seg_a, seg_b, None, dt, ws)?;
        self.measure(amps, rng, bits);
        Ok(())
    }

    fn vacuum(&self) -> Vec<C64> {
        let mut v = vec![C64::default(); self.dims.dim()];
        v[0] = C64::new(1.0, 0.0);
        v
    }

    /// One shot from vacuum using the samples starting at `offset`.
    pub fn shot(&self, signal: &ComplexSignal, offset: usize, shot_seed: u64) -> Result<TrajectoryRecord> {
        let mut ws = self.workspace();
        self.shot_with(signal, offset, shot_seed, &mut ws)
    }

    pub fn shot_with(&self, signal: &ComplexSignal, offset: usize, shot_seed: u64, ws: &mut Workspace) -> Result<TrajectoryRecord> {
        let k = self.samples_per_segment(signal.dt())?;
        let needed = offset + k * self.cfg.segments_per_shot();
        if signal.len() < needed {
            return Err(QrcError::SignalTooShort { needed, available: signal.len() });
        }
        let x = signal.samples();
        let mut rng = rng_from(shot_seed);
        let mut amps = self.vacuum();
        let mut bits = Vec::with_capacity(self.cfg.m());
        for r in 0..self.cfg.rounds_per_shot {
            let a = offset + 2 * r * k;
            self.round(&mut amps, r, &x[a..a + k], &x[a + k..a + 2 * k], signal.dt(), ws, &mut rng, &mut bits)?;
        }
        Ok(TrajectoryRecord { bits, shot_seed })
    }

    /// Exact outcome distribution of one shot driven by the first
    /// `segments_per_shot` segments of `signal`, indexed by bitstring code
    /// (first bit most significant). Enumerates the measurement tree.
    pub fn exact_distribution(&self, signal: &ComplexSignal) -> Result<Vec<f64>> {
        let k = self.samples_per_segment(signal.dt())?;
        let needed = k * self.cfg.segments_per_shot();
        if signal.len() < needed {
            return Err(QrcError::SignalTooShort { needed, available: signal.len() });
        }
        let m = self.cfg.m();
        if m > 24 {
            return Err(QrcError::Config("outcome table too large".into()));
        }
        let segs: Vec<&[C64]> = (0..self.cfg.segments_per_shot()).map(|i| &signal.samples()[i * k..(i + 1) * k]).collect();
        let affines: Vec<Vec<DriveAffine>> = match self.cfg.propagator {
            Propagator::Exact => segs.iter().map(|s| self.segment_affines(s, signal.dt())).collect(),
            Propagator::Rk4 => Vec::new(),
        };
        let mut table = vec![0.0; 1 << m];
        let mut ws = self.workspace();
        let ctx = Tree { segs: &segs, affines: &affines, dt: signal.dt() };
        self.descend(self.vacuum(), 0, 1.0, 0, &ctx, &mut table, &mut ws)?;
        let total: f64 = table.iter().sum();
        table.iter_mut().for_each(|p| *p /= total);
        Ok(table)
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        mut amps: Vec<C64>,
        round: usize,
        prob: f64,
        code: usize,
        ctx: &Tree,
        table: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<()> {
        if round == self.cfg.rounds_per_shot {
            table[code] += prob;
            return Ok(());
        }
        let aff =
            if ctx.affines.is_empty() { None } else { Some((ctx.affines[2 * round].as_slice(), ctx.affines[2 * round + 1].as_slice())) };
        self.round_unitary(&mut amps, round, ctx.segs[2 * round], ctx.segs[2 * round + 1], aff, ctx.dt, ws)?;
        let weights = self.outcome_weights(&amps);
        let nq = self.dims.n_qubits;
        for (s, &(even, odd)) in weights.iter().enumerate() {
            for (p, w) in [(0usize, even), (1, odd)] {
                if w < BRANCH_CUTOFF {
                    continue;
                }
                let mut child = amps.clone();
                self.collapse(&mut child, s, p, w);
                let next = (((code << nq) | s) << 1) | p;
                self.descend(child, round + 1, prob * w, next, ctx, table, ws)?;
            }
        }
        Ok(())
    }
}

struct Tree<'a> {
    segs: &'a [&'a [C64]],
    affines: &'a [Vec<DriveAffine>],
    dt: f64,
}

/// Draws an outcome code from a probability table with one uniform variate.
pub(crate) fn sample_code(table: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in table.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    table.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl Reservoir {
    /// One shot drawn from a precomputed exact table.
    pub fn sample_from_table(&self, table: &[f64], shot_seed: u64) -> TrajectoryRecord {
        let mut rng = rng_from(shot_seed);
        let code = sample_code(table, rng.gen::<f64>());
        TrajectoryRecord::from_code(code, self.cfg.m(), shot_seed)
    }
}
