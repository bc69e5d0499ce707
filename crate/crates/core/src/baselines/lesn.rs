use crate::error::{QrcError, Result};
use crate::learn::{fit_and_test, split_indices, Method, TrainConfig};
use crate::seeding::{derive_seed, rng_from, stream};
use crate::table::{fmt_f64, write_csv_file, Provenance};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LesnConfig {
    /// Reservoir dimension.
    pub r: usize,
    /// Input dimension.
    pub d: usize,
    /// Number of times each input is fed in.
    pub depth: usize,
    pub a: f64,
    pub gamma: f64,
    pub w_in: f64,
    pub rho: f64,
    pub p_s: f64,
    /// Feed a constant 1 alongside the input. Without it, the map from input
    /// to final state is positively homogeneous.
    pub input_bias: bool,
    pub seed: u64,
}

impl Default for LesnConfig {
    fn default() -> Self {
        Self { r: 64, d: 2, depth: 2, a: 1.0, gamma: 1.0, w_in: 1.0, rho: 0.9, p_s: 0.5, input_bias: true, seed: 0 }
    }
}

impl LesnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.d == 0 || self.depth == 0 {
            return Err(QrcError::Config("LESN dimensions and depth must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.a) || !(0.0..=1.0).contains(&self.gamma) {
            return Err(QrcError::Config("a and gamma must lie in [0,1]".into()));
        }
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return Err(QrcError::Config("p_s must lie in (0,1]".into()));
        }
        if !(self.w_in >= 0.0) || !(self.rho >= 0.0) {
            return Err(QrcError::Config("w_in and rho must be non-negative".into()));
        }
        Ok(())
    }

    fn input_columns(&self) -> usize {
        self.d + usize::from(self.input_bias)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lesn {
    pub cfg: LesnConfig,
    /// `r x (d + 1)` with the bias column last, or `r x d` without bias.
    pub w_in: DMatrix<f64>,
    pub w_res: DMatrix<f64>,
}

/// Draws the input and recurrent weights. The recurrent matrix is scaled so
/// that its largest singular value equals `rho`.
pub fn lesn_build(cfg: &LesnConfig) -> Result<Lesn> {
    cfg.validate()?;
    let mut rng = rng_from(derive_seed(cfg.seed, &[stream::LESN]));
    let w_in = DMatrix::from_fn(cfg.r, cfg.input_columns(), |_, _| rng.gen_range(-1.0..=1.0) * cfg.w_in);
    let raw = DMatrix::from_fn(cfg.r, cfg.r, |_, _| if rng.gen::<f64>() < cfg.p_s { rng.gen_range(-1.0..=1.0) } else { 0.0 });
    let top = raw.singular_values().max();
    if top == 0.0 {
        return Err(QrcError::DegenerateReservoir);
    }
    let w_res = raw * (cfg.rho / top);
    Ok(Lesn { cfg: *cfg, w_in, w_res })
}

/// Iterates `x_n = (1 - a gamma) x_{n-1} + gamma relu(W_in u_n + W_res x_{n-1})`
/// from `x_0 = 0` and returns the final state.
pub fn lesn_run(lesn: &Lesn, inputs: &[&[f64]]) -> Result<DVector<f64>> {
    let cfg = &lesn.cfg;
    let mut x = DVector::zeros(cfg.r);
    let mut u = DVector::zeros(cfg.input_columns());
    if cfg.input_bias {
        u[cfg.d] = 1.0;
    }
    let leak = 1.0 - cfg.a * cfg.gamma;
    for step in inputs {
        if step.len() != cfg.d {
            return Err(QrcError::Shape(format!("LESN input has {} entries, expected {}", step.len(), cfg.d)));
        }
        u.rows_mut(0, cfg.d).copy_from_slice(step);
        let mut pre = &lesn.w_in * &u;
        pre.gemv(1.0, &lesn.w_res, &x, 1.0);
        x = x * leak + pre.map(|v| v.max(0.0)) * cfg.gamma;
    }
    Ok(x)
}

/// Final states for static inputs fed `depth` times each; one row per input.
pub fn lesn_static_features(lesn: &Lesn, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(points.nrows(), lesn.cfg.r);
    for i in 0..points.nrows() {
        let p: Vec<f64> = points.row(i).iter().copied().collect();
        let steps: Vec<&[f64]> = (0..lesn.cfg.depth).map(|_| p.as_slice()).collect();
        out.set_row(i, &lesn_run(lesn, &steps)?.transpose());
    }
    Ok(out)
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// Hyperparameter grid; `a` and `gamma` are swept jointly over all pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesnGrid {
    pub a: Vec<f64>,
    pub gamma: Vec<f64>,
    pub w_in: Vec<f64>,
    pub rho: Vec<f64>,
    pub p_s: Vec<f64>,
}

impl Default for LesnGrid {
    fn default() -> Self {
        Self {
            a: vec![0.25, 0.5, 0.75, 1.0],
            gamma: vec![0.25, 0.5, 0.75, 1.0],
            w_in: vec![0.1, 0.5, 1.0, 2.0],
            rho: vec![0.5, 0.9, 1.2],
            p_s: vec![0.1, 0.5, 1.0],
        }
    }
}

impl LesnGrid {
    pub fn configs(&self, base: &LesnConfig) -> Vec<LesnConfig> {
        let mut out = Vec::new();
        for &a in &self.a {
            for &gamma in &self.gamma {
                for &w_in in &self.w_in {
                    for &rho in &self.rho {
                        for &p_s in &self.p_s {
                            out.push(LesnConfig { a, gamma, w_in, rho, p_s, ..*base });
                        }
                    }
                }
            }
        }
        out
    }
}

fn readout_cfg(seed: u64) -> TrainConfig {
    TrainConfig { method: Method::PseudoInverse, seed, ..TrainConfig::default() }
}

/// Test accuracy of one freshly drawn LESN with a ridge readout.
pub fn lesn_accuracy(
    cfg: &LesnConfig,
    x_train: &DMatrix<f64>,
    y_train: &[usize],
    x_test: &DMatrix<f64>,
    y_test: &[usize],
    n_classes: usize,
) -> Result<f64> {
    let lesn = lesn_build(cfg)?;
    let ftr = lesn_static_features(&lesn, x_train)?;
    let fte = lesn_static_features(&lesn, x_test)?;
    Ok(fit_and_test(&ftr, y_train, &fte, y_test, n_classes, &readout_cfg(cfg.seed))?.test.accuracy)
}

/// Picks the grid point with the best mean validation accuracy over
/// `trials` random reservoirs, using a held-out 20% of the training data.
/// Returns the winning configuration and its validation accuracy.
pub fn lesn_sweep(
    base: &LesnConfig,
    grid: &LesnGrid,
    trials: usize,
    x_train: &DMatrix<f64>,
    y_train: &[usize],
    n_classes: usize,
) -> Result<(LesnConfig, f64)> {
    let (fit, val) = split_indices(y_train.len(), 0.2, derive_seed(base.seed, &[stream::SPLIT]));
    let xf = select_rows(x_train, &fit);
    let yf: Vec<usize> = fit.iter().map(|&i| y_train[i]).collect();
    let xv = select_rows(x_train, &val);
    let yv: Vec<usize> = val.iter().map(|&i| y_train[i]).collect();
    let configs = grid.configs(base);
    let scores: Vec<f64> = configs
        .par_iter()
        .enumerate()
        .map(|(k, c)| {
            let mut total = 0.0;
            for t in 0..trials {
                let cfg = LesnConfig { seed: derive_seed(base.seed, &[k as u64, t as u64]), ..*c };
                total += match lesn_accuracy(&cfg, &xf, &yf, &xv, &yv, n_classes) {
                    Ok(a) => a,
                    Err(QrcError::DegenerateReservoir) => 0.0,
                    Err(e) => return Err(e),
                };
            }
            Ok(total / trials.max(1) as f64)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = k;
        }
    }
    Ok((configs[best], scores[best]))
}

/// Test accuracies of `count` independently drawn reservoirs.
pub fn lesn_ensemble(
    cfg: &LesnConfig,
    count: usize,
    x_train: &DMatrix<f64>,
    y_train: &[usize],
    x_test: &DMatrix<f64>,
    y_test: &[usize],
    n_classes: usize,
) -> Result<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let c = LesnConfig { seed: derive_seed(cfg.seed, &[stream::LESN, k as u64]), ..*cfg };
            lesn_accuracy(&c, x_train, y_train, x_test, y_test, n_classes)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LesnSummary {
    pub r: usize,
    pub depth: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

impl LesnSummary {
    pub fn from_accuracies(r: usize, depth: usize, acc: &[f64]) -> Self {
        let n = acc.len().max(1) as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Self { r, depth, mean_acc: mean, std_acc: var.sqrt() }
    }
}

pub fn write_lesn_summary_csv(path: &Path, prov: Option<&Provenance>, rows: &[LesnSummary]) -> Result<()> {
    let header: Vec<String> = ["r", "depth", "mean_acc", "std_acc"].iter().map(|s| s.to_string()).collect();
    let body: Vec<Vec<String>> =
        rows.iter().map(|s| vec![s.r.to_string(), s.depth.to_string(), fmt_f64(s.mean_acc), fmt_f64(s.std_acc)]).collect();
    write_csv_file(path, prov, &header, &body)
}
