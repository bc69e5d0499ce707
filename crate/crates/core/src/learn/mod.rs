//! Linear readout: training, evaluation and feature projection.

mod harness;
mod train;

pub use harness::{fit_and_test, shots_sweep, split_indices, write_curve_csv, CurvePoint, SplitData, Standardizer, TrainOutcome};
pub use train::{softmax_loss_and_grad, train_pseudoinverse, train_softmax, train_softmax_traced};

use crate::error::{QrcError, Result};
use crate::table::Provenance;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PseudoInverse,
    SoftmaxGrad,
    /// Train both and keep whichever scores higher.
    Best,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub method: Method,
    /// Ridge strengths tried by validation; a single entry skips the sweep.
    pub ridge_eps: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    /// Stop once the loss has improved by less than `min_improvement` for
    /// this many consecutive epochs.
    pub patience: usize,
    pub min_improvement: f64,
    /// Fraction of the training split held out to choose the ridge strength.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Best,
            ridge_eps: (0..9).map(|k| 10f64.powf(-6.0 + k as f64)).collect(),
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epochs: 2000,
            patience: 50,
            min_improvement: 1e-10,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ridge_eps.is_empty() || self.ridge_eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(QrcError::Config("ridge_eps must be a non-empty list of positive values".into()));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(QrcError::Config("invalid optimizer rates".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(QrcError::Config("validation_fraction must be in [0,1)".into()));
        }
        Ok(())
    }
}

/// Weights of shape `(R+1) x C`; the last row is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    pub classes: Vec<String>,
    pub w: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
    classes: Vec<String>,
    shape: [usize; 2],
    weights: Vec<f64>,
}

impl ReadoutModel {
    pub fn new(classes: Vec<String>, w: DMatrix<f64>) -> Result<Self> {
        if classes.len() != w.ncols() || classes.is_empty() || w.nrows() < 1 {
            return Err(QrcError::Shape(format!("{} classes for a {}x{} weight matrix", classes.len(), w.nrows(), w.ncols())));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(QrcError::Shape("non-finite weight".into()));
        }
        Ok(Self { classes, w })
    }

    pub fn n_features(&self) -> usize {
        self.w.nrows() - 1
    }

    pub fn n_classes(&self) -> usize {
        self.w.ncols()
    }

    /// Class scores `x W[..R] + W[R]` for each row of `x`.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let r = self.n_features();
        if x.ncols() != r {
            return Err(QrcError::Shape(format!("model expects {r} features, got {}", x.ncols())));
        }
        let mut s = x * self.w.rows(0, r);
        for mut row in s.row_iter_mut() {
            row += self.w.row(r);
        }
        Ok(s)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(self.scores(x)?.row_iter().map(|row| argmax(row.iter().copied())).collect())
    }

    pub fn to_json(&self) -> String {
        self.to_json_with(None)
    }

    /// JSON with the producing run's config hash and seed embedded.
    pub fn to_json_with(&self, prov: Option<&Provenance>) -> String {
        let f = ModelFile {
            provenance: prov.cloned(),
            classes: self.classes.clone(),
            shape: [self.w.nrows(), self.w.ncols()],
            weights: self.w.transpose().iter().copied().collect(),
        };
        serde_json::to_string_pretty(&f).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| QrcError::Format { path: "<model>".into(), msg: e.to_string() })?;
        if f.weights.len() != f.shape[0] * f.shape[1] {
            return Err(QrcError::Format { path: "<model>".into(), msg: "weights do not match shape".into() });
        }
        Self::new(f.classes, DMatrix::from_row_slice(f.shape[0], f.shape[1], &f.weights))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.save_with(path, None)
    }

    pub fn save_with(&self, path: &Path, prov: Option<&Provenance>) -> Result<()> {
        std::fs::write(path, self.to_json_with(prov)).map_err(|e| QrcError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| QrcError::io(path, e))?)
    }
}

/// First index of the largest value, so ties go to the lower class.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|c| c.to_string()).collect()
}

/// Appends a column of ones.
pub fn with_bias(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(x.ncols(), 1.0)
}

pub fn one_hot(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), n_classes, |i, c| if labels[i] == c { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[(true, predicted)]`
    pub confusion: DMatrix<usize>,
}

pub fn evaluate(model: &ReadoutModel, x: &DMatrix<f64>, labels: &[usize]) -> Result<Evaluation> {
    if x.nrows() != labels.len() {
        return Err(QrcError::Shape("one label per row required".into()));
    }
    let c = model.n_classes();
    let mut confusion = DMatrix::zeros(c, c);
    for (&t, p) in labels.iter().zip(model.predict(x)?) {
        if t >= c {
            return Err(QrcError::Shape(format!("label {t} outside {c} classes")));
        }
        confusion[(t, p)] += 1;
    }
    let correct: usize = (0..c).map(|i| confusion[(i, i)]).sum();
    let accuracy = if labels.is_empty() { 0.0 } else { correct as f64 / labels.len() as f64 };
    Ok(Evaluation { accuracy, confusion })
}

/// Projects centered rows of `x` onto the top `k` right singular vectors.
/// Each direction's sign is fixed so that its largest component is positive.
pub fn svd_project(x: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    if x.nrows() < k || x.ncols() < k || k == 0 {
        return Err(QrcError::Shape(format!("cannot project {}x{} data onto {k} directions", x.nrows(), x.ncols())));
    }
    let mut c = x.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let svd = c.clone().svd(false, true);
    let vt = svd.v_t.ok_or(QrcError::SingularSystem)?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut v = DMatrix::zeros(x.ncols(), k);
    for (j, &i) in order.iter().take(k).enumerate() {
        let mut dir = vt.row(i).transpose();
        let big = dir.iter().copied().fold(0.0f64, |m, z| if z.abs() > m.abs() { z } else { m });
        if big < 0.0 {
            dir.neg_mut();
        }
        v.set_column(j, &dir);
    }
    Ok(c * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_lower_class() {
        assert_eq!(argmax([1.0, 3.0, 3.0].into_iter()), 1);
        assert_eq!(argmax([0.0, 0.0].into_iter()), 0);
    }

    #[test]
    fn json_roundtrip() {
        let w = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.5]);
        let m = ReadoutModel::new(vec!["a".into(), "b".into()], w).unwrap();
        let text = m.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["shape"], serde_json::json!([3, 2]));
        assert_eq!(v["weights"], serde_json::json!([1.0, 2.0, 3.0, 4.0, 5.0, 6.5]));
        assert_eq!(ReadoutModel::from_json(&text).unwrap(), m);
    }

    #[test]
    fn evaluation_counts() {
        // scores = x (identity weights), bias zero
        let w = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let m = ReadoutModel::new(default_class_names(2), w).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 2.0, 1.0, 0.5, 0.5]);
        let e = evaluate(&m, &x, &[0, 1, 1, 1]).unwrap();
        assert_eq!(e.confusion, DMatrix::from_row_slice(2, 2, &[1, 0, 2, 1]));
        assert_eq!(e.accuracy, 0.5);
    }

    #[test]
    fn argmax_invariant_under_affine_score_change() {
        let w = DMatrix::from_fn(4, 3, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 / 3.0);
        let m = ReadoutModel::new(default_class_names(3), w.clone()).unwrap();
        let mut w2 = w * 2.5;
        for c in 0..3 {
            w2[(3, c)] += 4.0;
        }
        let m2 = ReadoutModel::new(default_class_names(3), w2).unwrap();
        assert_eq!(m.predict(&x).unwrap(), m2.predict(&x).unwrap());
    }
}
