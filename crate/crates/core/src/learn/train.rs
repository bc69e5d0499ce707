use super::{default_class_names, ReadoutModel, TrainConfig};
use crate::error::{QrcError, Result};
use crate::seeding::rng_from;
use nalgebra::DMatrix;
use rand::Rng;

/// Ridge solution of `min |X W - Y|^2 + eps |W|^2` for a design matrix that
/// already carries its column of ones.
pub fn train_pseudoinverse(x: &DMatrix<f64>, y: &DMatrix<f64>, eps: f64) -> Result<ReadoutModel> {
    if x.nrows() != y.nrows() {
        return Err(QrcError::Shape("x and y need the same number of rows".into()));
    }
    if x.nrows() < y.ncols() {
        return Err(QrcError::Shape(format!("{} samples for {} classes", x.nrows(), y.ncols())));
    }
    if !(eps >= 0.0) {
        return Err(QrcError::Config("ridge eps must be non-negative".into()));
    }
    let xt = x.transpose();
    let mut a = &xt * x;
    for i in 0..a.nrows() {
        a[(i, i)] += eps;
    }
    let b = &xt * y;
    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.lu().solve(&b).ok_or(QrcError::SingularSystem)?,
    };
    if w.iter().any(|v| !v.is_finite()) {
        return Err(QrcError::SingularSystem);
    }
    ReadoutModel::new(default_class_names(y.ncols()), w)
}

fn softmax_rows(z: &mut DMatrix<f64>) {
    for mut row in z.row_iter_mut() {
        let top = row.max();
        row.iter_mut().for_each(|v| *v = (*v - top).exp());
        let s = row.sum();
        row /= s;
    }
}

/// Mean squared error between `softmax(X W)` and the one-hot targets, and
/// its gradient with respect to `W`.
pub fn softmax_loss_and_grad(x: &DMatrix<f64>, y: &DMatrix<f64>, w: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let mut s = x * w;
    softmax_rows(&mut s);
    let scale = 1.0 / (y.nrows() * y.ncols()) as f64;
    let diff = &s - y;
    let loss = diff.norm_squared() * scale;
    let g = diff * (2.0 * scale);
    let mut dz = DMatrix::zeros(s.nrows(), s.ncols());
    for i in 0..s.nrows() {
        let dot: f64 = (0..s.ncols()).map(|k| g[(i, k)] * s[(i, k)]).sum();
        for j in 0..s.ncols() {
            dz[(i, j)] = s[(i, j)] * (g[(i, j)] - dot);
        }
    }
    (loss, x.transpose() * dz)
}

/// Full-batch Adam on the softmax MSE loss. Returns the model and the loss
/// recorded before each update.
pub fn train_softmax_traced(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &TrainConfig) -> Result<(ReadoutModel, Vec<f64>)> {
    cfg.validate()?;
    if x.nrows() != y.nrows() {
        return Err(QrcError::Shape("x and y need the same number of rows".into()));
    }
    let mut rng = rng_from(cfg.seed);
    let mut w = DMatrix::from_fn(x.ncols(), y.ncols(), |_, _| rng.gen_range(-0.01..0.01));
    let mut m1 = DMatrix::<f64>::zeros(w.nrows(), w.ncols());
    let mut m2 = DMatrix::<f64>::zeros(w.nrows(), w.ncols());
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut stale = 0;
    for epoch in 0..cfg.epochs {
        let (loss, g) = softmax_loss_and_grad(x, y, &w);
        if !loss.is_finite() {
            return Err(QrcError::NonFiniteLoss { epoch });
        }
        if let Some(&prev) = history.last() {
            if prev - loss < cfg.min_improvement {
                stale += 1;
            } else {
                stale = 0;
            }
        }
        history.push(loss);
        if stale >= cfg.patience {
            break;
        }
        let t = (epoch + 1) as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for ((wi, gi), (a, b)) in w.iter_mut().zip(g.iter()).zip(m1.iter_mut().zip(m2.iter_mut())) {
            *a = cfg.beta1 * *a + (1.0 - cfg.beta1) * gi;
            *b = cfg.beta2 * *b + (1.0 - cfg.beta2) * gi * gi;
            *wi -= cfg.lr * (*a / c1) / ((*b / c2).sqrt() + 1e-8);
        }
    }
    Ok((ReadoutModel::new(default_class_names(y.ncols()), w)?, history))
}

pub fn train_softmax(x: &DMatrix<f64>, y: &DMatrix<f64>, cfg: &TrainConfig) -> Result<ReadoutModel> {
    train_softmax_traced(x, y, cfg).map(|(m, _)| m)
}
