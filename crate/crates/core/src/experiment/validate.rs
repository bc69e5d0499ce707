//! Oracle checks of the simulator, run by `qrc validate`.

use crate::error::Result;
use crate::fock::{SystemParams, C64};
use crate::reservoir::{
    function_space_rank, geometric_phase_oracle, kerr_revival_check, parity_projector_chain, parity_trajectory_oracle, GateSchedule,
    ProtocolConfig, QubitCarry, QubitPrior, Reservoir,
};
use crate::seeding::{derive_seed, stream};
use crate::signals::ComplexSignal;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub n_fock: Option<usize>,
    pub guard_threshold: Option<f64>,
    /// Shots per point of the geometric-phase scan.
    pub phase_shots: usize,
    /// Shots for the parity-trajectory distribution.
    pub parity_shots: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { n_fock: None, guard_threshold: None, phase_shots: 10_000, parity_shots: 100_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl ValidateOptions {
    fn system(&self, n_fock: usize) -> SystemParams {
        let d = SystemParams::default();
        SystemParams { n_fock: self.n_fock.unwrap_or(n_fock), guard_threshold: self.guard_threshold.unwrap_or(d.guard_threshold), ..d }
    }
}

/// Round-1 excitation frequency against `cos^2(A - pi/4)` on a 12-point
/// phase grid, `|alpha| = 0.5`, `|beta|` in {0.1, 0.25, 0.5}; passes when
/// every point is within 4 binomial standard deviations.
pub fn check_geometric_phase(opts: &ValidateOptions) -> Result<CheckResult> {
    let base = ProtocolConfig { alpha: 0.5, rounds_per_shot: 1, system: opts.system(32), ..ProtocolConfig::default() };
    let cfg = ProtocolConfig { input_scale: 1.0 / base.segment_duration(), ..base };
    let res = Reservoir::new(cfg.clone())?;
    let alpha = cfg.alpha_for_round(0);
    let mut worst: f64 = 0.0;
    let mut point = 0u64;
    for mag in [0.1, 0.25, 0.5] {
        for k in 0..12 {
            let beta = C64::from_polar(mag, 2.0 * PI * k as f64 / 12.0);
            // one segment displaces the ground branch by -i z
            let sig = ComplexSignal::constant(C64::i() * beta, cfg.segments_per_shot(), cfg.segment_duration());
            let n = opts.phase_shots;
            let hits = (0..n)
                .into_par_iter()
                .map(|s| res.shot(&sig, 0, derive_seed(opts.seed, &[stream::SHOT, point, s as u64])).map(|r| usize::from(r.bits[0])))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum::<usize>();
            let p = geometric_phase_oracle(alpha, beta, QubitPrior::G);
            let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64);
            worst = worst.max((hits as f64 / n as f64 - p).abs() / sigma);
            point += 1;
        }
    }
    Ok(CheckResult { name: "geometric-phase", passed: worst < 4.0, detail: format!("36 points, worst deviation {worst:.2} sigma") })
}

/// Displacement-only protocol with 4 rounds and `|beta| = 0.4` per round:
/// sampled parity strings against the closed form (total variation below
/// 0.02), and the closed form against the explicit projector chain.
pub fn check_parity_trajectory(opts: &ValidateOptions) -> Result<CheckResult> {
    let base = ProtocolConfig {
        gates: GateSchedule::DisplacementOnly,
        carry: QubitCarry::Reset,
        rounds_per_shot: 4,
        system: opts.system(48),
        ..ProtocolConfig::default()
    };
    let cfg = ProtocolConfig { input_scale: 1.0 / base.segment_duration(), ..base };
    let m = cfg.rounds_per_shot;
    let res = Reservoir::new(cfg.clone())?;
    // two segments per round, each displacing by -i z
    let z = C64::new(0.2, 0.0);
    let beta = -C64::i() * z * 2.0;
    let sig = ComplexSignal::constant(z, cfg.segments_per_shot(), cfg.segment_duration());
    let closed = parity_trajectory_oracle(beta, m)?;
    let brute = parity_projector_chain(beta, m, 48)?;
    let exact_err = closed.iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let n = opts.parity_shots;
    let codes = (0..n)
        .into_par_iter()
        .map(|s| {
            res.shot(&sig, 0, derive_seed(opts.seed, &[stream::SHOT, 1 << 20, s as u64])).map(|r| {
                // parity bits sit at odd positions
                r.bits.iter().skip(1).step_by(2).fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; 1 << m];
    for c in codes {
        counts[c] += 1;
    }
    let tv = 0.5 * counts.iter().zip(&closed).map(|(&c, &p)| (c as f64 / n as f64 - p).abs()).sum::<f64>();
    Ok(CheckResult {
        name: "parity-trajectory",
        passed: tv < 0.02 && exact_err < 1e-8,
        detail: format!("total variation {tv:.4} at {n} shots, closed form vs projector chain {exact_err:.1e}"),
    })
}

/// Rank of the outcome-probability function space for M in {1, 2, 4}.
pub fn check_function_space_rank() -> Result<CheckResult> {
    let grid: Vec<f64> = (1..=40).map(|k| 0.04 * k as f64).collect();
    let mut ranks = Vec::new();
    for m in [1, 2, 4] {
        ranks.push((m, function_space_rank(m, &grid)?));
    }
    let passed = ranks.iter().all(|&(m, r)| r == m + 1);
    let detail = ranks.iter().map(|(m, r)| format!("M={m}: {r}")).collect::<Vec<_>>().join(", ");
    Ok(CheckResult { name: "function-space-rank", passed, detail })
}

/// Vacuum fidelity after a conditional displacement, one revival period of
/// free evolution and the inverse displacement.
pub fn check_kerr_revival(opts: &ValidateOptions) -> Result<CheckResult> {
    let cfg = ProtocolConfig { alpha: 0.5, system: opts.system(32), ..ProtocolConfig::default() };
    let f = kerr_revival_check(C64::new(cfg.alpha, 0.0), &cfg, cfg.system.revival_period())?;
    Ok(CheckResult { name: "kerr-revival", passed: f > 0.99, detail: format!("fidelity {f:.6}") })
}

/// Runs every check. Simulation errors, such as a tripped truncation
/// guard, abort the suite.
pub fn run_validation(opts: &ValidateOptions) -> Result<Vec<CheckResult>> {
    Ok(vec![check_geometric_phase(opts)?, check_parity_trajectory(opts)?, check_function_space_rank()?, check_kerr_revival(opts)?])
}
