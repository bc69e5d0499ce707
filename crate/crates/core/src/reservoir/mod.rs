//! The reservoir protocol: per round, a qubit pi/2 pulse, a conditional
//! displacement, two analog input segments around a qubit pi pulse, the
//! inverse conditional displacement and a closing pi/2 pulse, followed by a
//! qubit measurement and an oscillator parity measurement.

mod engine;
mod oracles;
mod trajectory;

pub use engine::Reservoir;
pub use oracles::{
    function_space_rank, geometric_phase_oracle, kerr_revival_check, parity_projector_chain, parity_trajectory_oracle, QubitPrior,
};
pub use trajectory::{read_trajectories_jsonl, write_trajectories_jsonl, TrajectoryRecord};

use crate::error::{QrcError, Result};
use crate::fock::{displacement, DenseOperator, HilbertDims, JointState, SystemParams, C64};
use crate::signals::ComplexSignal;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// What the qubit register holds at the start of the next round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QubitCarry {
    /// The qubit encodes the parity outcome (`g` for even, `e` for odd), as it
    /// does when it serves as the parity ancilla. Single qubit only.
    ParityOutcome,
    /// The qubit stays in whatever state its own measurement left it.
    QubitOutcome,
    /// The qubit is reset to `g`.
    Reset,
}

/// Gate content of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateSchedule {
    Full,
    /// No qubit pulses and no conditional displacements: the oscillator is
    /// driven directly and only parity carries information.
    DisplacementOnly,
}

/// How input segments are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Closed-form zero-order-hold propagator per qubit block.
    Exact,
    /// Fixed-step RK4 on the full Hamiltonian.
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    /// Conditional-displacement magnitude.
    pub alpha: f64,
    /// Phases of the conditional displacement, cycled over rounds.
    pub alpha_phases: Vec<f64>,
    pub rounds_per_shot: usize,
    /// Each segment lasts this many revival periods `2 pi / chi`.
    pub segment_multiplier: usize,
    pub system: SystemParams,
    /// Drive amplitude (rad/us) per unit of signal.
    pub input_scale: f64,
    pub carry: QubitCarry,
    pub gates: GateSchedule,
    pub propagator: Propagator,
    /// Conditional displacements for registers of more than one qubit.
    pub grid: Option<MultiQubitGrid>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            alpha_phases: vec![0.0, PI / 2.0],
            rounds_per_shot: 4,
            segment_multiplier: 1,
            system: SystemParams::default(),
            input_scale: 1.0,
            carry: QubitCarry::ParityOutcome,
            gates: GateSchedule::Full,
            propagator: Propagator::Exact,
            grid: None,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(QrcError::Config(format!("|alpha| must be in [0,1], got {}", self.alpha)));
        }
        if self.alpha_phases.is_empty() {
            return Err(QrcError::Config("alpha_phases must not be empty".into()));
        }
        if self.rounds_per_shot == 0 || self.segment_multiplier == 0 {
            return Err(QrcError::Config("rounds_per_shot and segment_multiplier must be positive".into()));
        }
        if !self.input_scale.is_finite() {
            return Err(QrcError::Config("input_scale must be finite".into()));
        }
        if self.n_qubits() > 1 && self.carry == QubitCarry::ParityOutcome {
            return Err(QrcError::Config("parity-outcome carry needs a single qubit".into()));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.grid.as_ref().map_or(1, |g| g.n_qubits)
    }

    pub fn dims(&self) -> HilbertDims {
        HilbertDims { n_fock: self.system.n_fock, n_qubits: self.n_qubits() }
    }

    pub fn segment_duration(&self) -> f64 {
        self.segment_multiplier as f64 * self.system.revival_period()
    }

    pub fn bits_per_round(&self) -> usize {
        self.n_qubits() + 1
    }

    /// Number of recorded bits per shot.
    pub fn m(&self) -> usize {
        self.rounds_per_shot * self.bits_per_round()
    }

    pub fn segments_per_shot(&self) -> usize {
        2 * self.rounds_per_shot
    }

    /// Samples per input segment for a signal sampled at `dt`.
    pub fn samples_per_segment(&self, dt: f64) -> Result<usize> {
        let t = self.segment_duration();
        let n = (t / dt).round();
        if n < 1.0 || (n * dt - t).abs() > 1e-9 * t {
            return Err(QrcError::Config(format!("signal dt {dt} does not divide the segment duration {t}")));
        }
        Ok(n as usize)
    }

    pub fn alpha_for_round(&self, round: usize) -> C64 {
        C64::from_polar(self.alpha, self.alpha_phases[round % self.alpha_phases.len()])
    }
}

/// Per-bitstring displacement table for multi-qubit registers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiQubitGrid {
    pub n_qubits: usize,
    pub displacement_map: Vec<C64>,
}

impl MultiQubitGrid {
    pub fn new(n_qubits: usize, displacement_map: Vec<C64>) -> Result<Self> {
        if !(1..=4).contains(&n_qubits) || displacement_map.len() != 1 << n_qubits {
            return Err(QrcError::Config("grid needs 1-4 qubits and 2^n entries".into()));
        }
        Ok(Self { n_qubits, displacement_map })
    }

    /// Standard grids indexed by the decimal value of the qubit bitstring.
    ///
    /// * n=1: `{+0.5, -0.5}`
    /// * n=2: corners `+-0.5 +- 0.5i`; the first qubit picks the sign of the
    ///   real part and the second the sign of the imaginary part, `0` meaning `+`.
    /// * n=3: the 3x3 grid on `[-1,1]^2` without its centre, row-major from
    ///   the top-left corner.
    /// * n=4: the 4x4 grid on `{-1.5,-0.5,0.5,1.5}^2`, row-major from the top-left.
    pub fn standard(n_qubits: usize) -> Result<Self> {
        let map = match n_qubits {
            1 => vec![C64::new(0.5, 0.0), C64::new(-0.5, 0.0)],
            2 => (0..4)
                .map(|s| {
                    let re = if s & 2 == 0 { 0.5 } else { -0.5 };
                    let im = if s & 1 == 0 { 0.5 } else { -0.5 };
                    C64::new(re, im)
                })
                .collect(),
            3 => {
                let mut v = Vec::new();
                for row in 0..3 {
                    for col in 0..3 {
                        if row == 1 && col == 1 {
                            continue;
                        }
                        v.push(C64::new(col as f64 - 1.0, 1.0 - row as f64));
                    }
                }
                v
            }
            4 => {
                let mut v = Vec::new();
                for row in 0..4 {
                    for col in 0..4 {
                        v.push(C64::new(col as f64 - 1.5, 1.5 - row as f64));
                    }
                }
                v
            }
            _ => return Err(QrcError::Config(format!("no standard grid for {n_qubits} qubits"))),
        };
        Self::new(n_qubits, map)
    }
}

/// `D(alpha)|g><e| + D(-alpha)|e><g|` on a single-qubit joint space.
pub fn cnod(alpha: C64, dims: HilbertDims) -> Result<DenseOperator> {
    if dims.n_qubits != 1 {
        return Err(QrcError::Shape("cnod acts on a single qubit".into()));
    }
    let nf = dims.n_fock;
    let dp = displacement(alpha, nf)?;
    let dm = displacement(-alpha, nf)?;
    let mut m = DMatrix::zeros(2 * nf, 2 * nf);
    m.view_mut((0, nf), (nf, nf)).copy_from(dp.matrix());
    m.view_mut((nf, 0), (nf, nf)).copy_from(dm.matrix());
    DenseOperator::new(dims, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// `exp(-i angle sigma_axis / 2)` as a 2x2 matrix, basis `(g, e)`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> [[C64; 2]; 2] {
    let c = C64::new((angle / 2.0).cos(), 0.0);
    let s = (angle / 2.0).sin();
    match axis {
        Axis::X => [[c, C64::new(0.0, -s)], [C64::new(0.0, -s), c]],
        Axis::Y => [[c, C64::new(-s, 0.0)], [C64::new(s, 0.0), c]],
    }
}

/// The same rotation applied to every qubit of the register.
pub fn qubit_rotation(axis: Axis, angle: f64, dims: HilbertDims) -> Result<DenseOperator> {
    let r = rotation_matrix(axis, angle);
    let m2 = DMatrix::from_fn(2, 2, |i, j| r[i][j]);
    let mut full = DMatrix::<C64>::identity(1, 1);
    for _ in 0..dims.n_qubits {
        full = full.kronecker(&m2);
    }
    DenseOperator::on_qubits(&full, dims)
}

/// `sum_s |s><s| (x) D(grid[s])`
pub fn multiqubit_conditional_displacement(grid: &MultiQubitGrid, dims: HilbertDims) -> Result<DenseOperator> {
    if dims.n_qubits != grid.n_qubits {
        return Err(QrcError::Shape("grid and space disagree on qubit count".into()));
    }
    let nf = dims.n_fock;
    let mut m = DMatrix::zeros(dims.dim(), dims.dim());
    for (s, &a) in grid.displacement_map.iter().enumerate() {
        let d = displacement(a, nf)?;
        m.view_mut((s * nf, s * nf), (nf, nf)).copy_from(d.matrix());
    }
    DenseOperator::new(dims, m)
}

/// One protocol round on `state`. `round` selects the conditional-displacement
/// phase. Returns the post-measurement state (after the qubit carry-over rule)
/// and the recorded qubit bits followed by the parity bit.
pub fn run_round<R: Rng + ?Sized>(
    state: &JointState,
    segment_a: &ComplexSignal,
    segment_b: &ComplexSignal,
    cfg: &ProtocolConfig,
    round: usize,
    rng: &mut R,
) -> Result<(JointState, Vec<u8>)> {
    let res = Reservoir::new(cfg.clone())?;
    if (segment_a.dt() - segment_b.dt()).abs() > 1e-15 {
        return Err(QrcError::Config("segments must share a sample grid".into()));
    }
    let per_seg = res.samples_per_segment(segment_a.dt())?;
    for seg in [segment_a, segment_b] {
        if seg.len() != per_seg {
            return Err(QrcError::SignalTooShort { needed: per_seg, available: seg.len() });
        }
    }
    let mut ws = res.workspace();
    let mut amps = state.amplitudes().to_vec();
    let mut bits = Vec::with_capacity(cfg.bits_per_round());
    res.round(&mut amps, round, segment_a.samples(), segment_b.samples(), segment_a.dt(), &mut ws, rng, &mut bits)?;
    Ok((JointState::from_raw(state.dims(), amps), bits))
}

/// One shot from vacuum, consuming `2 * rounds_per_shot` segments from the
/// start of `signal`.
pub fn run_shot(signal: &ComplexSignal, cfg: &ProtocolConfig, shot_seed: u64) -> Result<TrajectoryRecord> {
    Reservoir::new(cfg.clone())?.shot(signal, 0, shot_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_vacuum;

    #[test]
    fn cnod_zero_is_x() {
        let dims = HilbertDims::new(6, 1).unwrap();
        let op = cnod(C64::new(0.0, 0.0), dims).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(op.max_abs_diff(&DenseOperator::on_qubits(&x, dims).unwrap()) < 1e-15);
    }

    #[test]
    fn cnod_squared_returns_vacuum() {
        let dims = HilbertDims::new(32, 1).unwrap();
        let op = cnod(C64::new(0.3, -0.2), dims).unwrap();
        assert!(op.unitarity_error() < 1e-8);
        let out = op.apply(&op.apply(&make_vacuum(dims)).unwrap()).unwrap();
        assert!(out.fidelity(&make_vacuum(dims)) > 1.0 - 1e-12);
    }

    #[test]
    fn rotation_conventions() {
        let dims = HilbertDims::new(4, 1).unwrap();
        let xpi = qubit_rotation(Axis::X, PI, dims).unwrap();
        let out = xpi.apply(&make_vacuum(dims)).unwrap();
        assert!((out.amplitudes()[4] - C64::new(0.0, -1.0)).norm() < 1e-15);
        let half = qubit_rotation(Axis::X, PI / 2.0, dims).unwrap();
        assert!(half.compose(&half).unwrap().max_abs_diff(&xpi) < 1e-10);
        let y = qubit_rotation(Axis::Y, PI / 2.0, dims).unwrap().apply(&make_vacuum(dims)).unwrap();
        let pops = y.qubit_populations();
        assert!((pops[0] - 0.5).abs() < 1e-15 && (pops[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_qubit_grid_reproduces_cnod() {
        let dims = HilbertDims::new(24, 1).unwrap();
        let a = C64::new(0.2, 0.1);
        let grid = MultiQubitGrid::new(1, vec![a, -a]).unwrap();
        let cd = multiqubit_conditional_displacement(&grid, dims).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let xop = DenseOperator::on_qubits(&x, dims).unwrap();
        // D(a) on the g block of X|psi> is D(a)|g><e|; likewise for e
        let composed = cd.compose(&xop).unwrap();
        assert!(composed.max_abs_diff(&cnod(a, dims).unwrap()) < 1e-12);
    }

    #[test]
    fn standard_grids() {
        let g2 = MultiQubitGrid::standard(2).unwrap();
        assert!(g2.displacement_map.iter().all(|z| (z.re.abs() - 0.5).abs() < 1e-15 && (z.im.abs() - 0.5).abs() < 1e-15));
        assert_eq!(g2.displacement_map[0], C64::new(0.5, 0.5));
        let g3 = MultiQubitGrid::standard(3).unwrap();
        assert_eq!(g3.displacement_map.len(), 8);
        assert!(g3.displacement_map.iter().all(|z| z.norm() > 0.5 && z.re.abs() <= 1.0 && z.im.abs() <= 1.0));
        assert_eq!(MultiQubitGrid::standard(4).unwrap().displacement_map.len(), 16);

        let dims = HilbertDims::new(32, 2).unwrap();
        let op = multiqubit_conditional_displacement(&g2, dims).unwrap();
        assert!(op.unitarity_error() < 1e-8);
        let out = op.apply(&make_vacuum(dims)).unwrap();
        assert!((out.mean_photon_number() - 0.5).abs() < 1e-10);
        assert!((out.qubit_populations()[0] - 1.0).abs() < 1e-12);
    }
}
