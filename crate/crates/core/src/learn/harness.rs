use super::{evaluate, one_hot, train_pseudoinverse, train_softmax, with_bias, Evaluation, Method, ReadoutModel, TrainConfig};
use crate::error::{QrcError, Result};
use crate::seeding::{derive_seed, rng_from, stream};
use crate::table::{fmt_f64, write_csv_file, Provenance};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use std::path::Path;

/// Per-column affine map to zero mean and unit variance. Constant columns
/// are only centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut scale = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean.push(mu);
            scale.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j])
    }

    /// Rewrites a model trained on standardized features so that it acts on
    /// raw features.
    pub fn fold(&self, model: &ReadoutModel) -> Result<ReadoutModel> {
        let r = self.mean.len();
        if model.n_features() != r {
            return Err(QrcError::Shape("standardizer and model disagree on feature count".into()));
        }
        let mut w = model.w.clone();
        for c in 0..w.ncols() {
            let mut bias = w[(r, c)];
            for j in 0..r {
                let wj = w[(j, c)] / self.scale[j];
                bias -= wj * self.mean[j];
                w[(j, c)] = wj;
            }
            w[(r, c)] = bias;
        }
        ReadoutModel::new(model.classes.clone(), w)
    }
}

/// Seed-stable partition of `0..n`: returns `(kept, held_out)` with
/// `round(n * fraction)` held out. Both lists are sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    let k = ((n as f64) * fraction).round() as usize;
    let mut held: Vec<usize> = idx[..k.min(n)].to_vec();
    let mut kept: Vec<usize> = idx[k.min(n)..].to_vec();
    held.sort_unstable();
    kept.sort_unstable();
    (kept, held)
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Acts on raw (unstandardized) features.
    pub model: ReadoutModel,
    pub method: Method,
    pub ridge_eps: Option<f64>,
    pub test: Evaluation,
}

fn ridge_with_validation(xs: &DMatrix<f64>, labels: &[usize], n_classes: usize, cfg: &TrainConfig) -> Result<(ReadoutModel, f64)> {
    let mut eps = cfg.ridge_eps[0];
    if cfg.ridge_eps.len() > 1 && cfg.validation_fraction > 0.0 {
        let (fit, val) = split_indices(labels.len(), cfg.validation_fraction, derive_seed(cfg.seed, &[stream::SPLIT]));
        if !fit.is_empty() && !val.is_empty() {
            let xf = with_bias(&select_rows(xs, &fit));
            let yf = one_hot(&fit.iter().map(|&i| labels[i]).collect::<Vec<_>>(), n_classes);
            let xv = select_rows(xs, &val);
            let yv: Vec<usize> = val.iter().map(|&i| labels[i]).collect();
            let mut best = f64::NEG_INFINITY;
            for &e in &cfg.ridge_eps {
                let acc = match train_pseudoinverse(&xf, &yf, e) {
                    Ok(m) => evaluate(&m, &xv, &yv)?.accuracy,
                    Err(QrcError::SingularSystem) => continue,
                    Err(err) => return Err(err),
                };
                if acc > best {
                    best = acc;
                    eps = e;
                }
            }
        }
    }
    let m = train_pseudoinverse(&with_bias(xs), &one_hot(labels, n_classes), eps)?;
    Ok((m, eps))
}

/// Standardizes on the training rows, trains with the configured method(s)
/// and scores on the test rows. With [`Method::Best`] the method with the
/// higher test accuracy is reported (ridge wins ties).
pub fn fit_and_test(
    x_train: &DMatrix<f64>,
    y_train: &[usize],
    x_test: &DMatrix<f64>,
    y_test: &[usize],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if x_train.nrows() != y_train.len() || x_test.nrows() != y_test.len() || x_train.ncols() != x_test.ncols() {
        return Err(QrcError::Shape("inconsistent train/test shapes".into()));
    }
    let std = Standardizer::fit(x_train);
    let xs = std.apply(x_train);
    let mut candidates = Vec::new();
    if matches!(cfg.method, Method::PseudoInverse | Method::Best) {
        let (m, eps) = ridge_with_validation(&xs, y_train, n_classes, cfg)?;
        candidates.push((std.fold(&m)?, Method::PseudoInverse, Some(eps)));
    }
    if matches!(cfg.method, Method::SoftmaxGrad | Method::Best) {
        let scfg = TrainConfig { seed: derive_seed(cfg.seed, &[stream::TRAIN]), ..cfg.clone() };
        let m = train_softmax(&with_bias(&xs), &one_hot(y_train, n_classes), &scfg)?;
        candidates.push((std.fold(&m)?, Method::SoftmaxGrad, None));
    }
    let mut best: Option<TrainOutcome> = None;
    for (model, method, ridge_eps) in candidates {
        let test = evaluate(&model, x_test, y_test)?;
        if best.as_ref().is_none_or(|b| test.accuracy > b.test.accuracy) {
            best = Some(TrainOutcome { model, method, ridge_eps, test });
        }
    }
    Ok(best.expect("at least one method runs"))
}

/// Train and test features at one shot budget.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub x_train: DMatrix<f64>,
    pub y_train: Vec<usize>,
    pub x_test: DMatrix<f64>,
    pub y_test: Vec<usize>,
    pub n_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub budget: usize,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

/// Trains and tests at each budget. `features_at(budget)` must build train
/// and test features from `budget` shots per example.
pub fn shots_sweep<F>(budgets: &[usize], cfg: &TrainConfig, mut features_at: F) -> Result<Vec<(CurvePoint, TrainOutcome)>>
where
    F: FnMut(usize) -> Result<SplitData>,
{
    if budgets.is_empty() || budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QrcError::Config("shot budgets must be non-empty and strictly ascending".into()));
    }
    let mut out = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let d = features_at(budget)?;
        let o = fit_and_test(&d.x_train, &d.y_train, &d.x_test, &d.y_test, d.n_classes, cfg)?;
        let p = CurvePoint { budget, accuracy: o.test.accuracy, n_train: d.y_train.len(), n_test: d.y_test.len(), seed: cfg.seed };
        out.push((p, o));
    }
    Ok(out)
}

pub fn write_curve_csv(path: &Path, prov: Option<&Provenance>, points: &[CurvePoint]) -> Result<()> {
    let header: Vec<String> = ["budget", "accuracy", "n_train", "n_test", "seed"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![p.budget.to_string(), fmt_f64(p.accuracy), p.n_train.to_string(), p.n_test.to_string(), p.seed.to_string()])
        .collect();
    write_csv_file(path, prov, &header, &rows)
}
