//! D3 virtual-classifier drift detector: train a classifier to separate the
//! two windows; out-of-fold ROC-AUC above chance signals drift.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::modelloss::{roc_auc, KnnModel, Scaler};
use crate::stream::{LabeledScore, Window};

use super::TwoSampleResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum D3Classifier {
    Linear,
    Knn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D3Config {
    pub classifier: D3Classifier,
    /// Stratified cross-validation folds.
    pub folds: usize,
    /// Neighbors for the knn classifier.
    pub k: usize,
    /// L2 regularization of the logistic separator.
    pub ridge: f64,
    /// AUC threshold for the boolean drift flag.
    pub tau: f64,
}

impl Default for D3Config {
    fn default() -> Self {
        Self {
            classifier: D3Classifier::Linear,
            folds: 5,
            k: 5,
            ridge: 1.0,
            tau: 0.7,
        }
    }
}

/// L2-regularized logistic regression fitted by Newton iterations; the
/// intercept is unpenalized. Returns (weights, intercept).
fn fit_logistic(z: &DesignMatrix, labels: &[bool], lambda: f64) -> Result<(Vec<f64>, f64)> {
    let m = z.n_rows();
    let p = z.n_cols();
    let dim = p + 1;
    let mut w = DVector::<f64>::zeros(dim); // last entry = intercept
    let mut aug = vec![0.0f64; dim];
    for _ in 0..25 {
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..m {
            let row = z.row(i);
            aug[..p].copy_from_slice(row);
            aug[p] = 1.0;
            let mut margin = 0.0;
            for d in 0..dim {
                margin += w[d] * aug[d];
            }
            let prob = 1.0 / (1.0 + (-margin).exp());
            let y = if labels[i] { 1.0 } else { 0.0 };
            let s = (prob * (1.0 - prob)).max(1e-6);
            for d in 0..dim {
                grad[d] += (prob - y) * aug[d];
                for e in d..dim {
                    hess[(d, e)] += s * aug[d] * aug[e];
                }
            }
        }
        for d in 0..p {
            grad[d] += lambda * w[d];
            hess[(d, d)] += lambda;
        }
        hess[(p, p)] += 1e-9; // keep the intercept row invertible
        for d in 0..dim {
            for e in 0..d {
                hess[(d, e)] = hess[(e, d)];
            }
        }
        let step = hess
            .clone()
            .cholesky()
            .map(|c| c.solve(&grad))
            .or_else(|| hess.lu().solve(&grad))
            .ok_or_else(|| Error::Numerical("singular logistic Hessian".into()))?;
        w -= &step;
        if step.amax() < 1e-9 {
            break;
        }
    }
    Ok((w.as_slice()[..p].to_vec(), w[p]))
}

/// Score a window pair with a virtual classifier: label A-rows 0 and B-rows
/// 1, run stratified k-fold cross-validation, and report the ROC-AUC of the
/// out-of-fold scores as the drift statistic.
pub fn d3_score(a: &Window, b: &Window, cfg: &D3Config, seed: u64) -> Result<TwoSampleResult> {
    if a.width() != b.width() {
        return Err(Error::Shape(format!(
            "window widths differ: {} vs {}",
            a.width(),
            b.width()
        )));
    }
    if cfg.folds < 2 {
        return Err(Error::Value("d3 needs at least 2 folds".into()));
    }
    if a.len() < cfg.folds || b.len() < cfg.folds {
        return Err(Error::Size(format!(
            "windows of {} and {} rows cannot fill {} stratified folds",
            a.len(),
            b.len(),
            cfg.folds
        )));
    }
    let rows: Vec<&[f64]> = a.rows().chain(b.rows()).collect();
    let labels: Vec<bool> = (0..rows.len()).map(|i| i >= a.len()).collect();

    // Stratified fold assignment: shuffle within each class, deal round-robin.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; rows.len()];
    for class in [false, true] {
        let mut members: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = pos % cfg.folds;
        }
    }

    let mut scores = vec![0.0f64; rows.len()];
    for fold in 0..cfg.folds {
        let train_idx: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] != fold).collect();
        let val_idx: Vec<usize> = (0..rows.len()).filter(|&i| fold_of[i] == fold).collect();
        let train_rows: Vec<Vec<f64>> = train_idx.iter().map(|&i| rows[i].to_vec()).collect();
        let train_x = DesignMatrix::from_rows(&train_rows)?;
        match cfg.classifier {
            D3Classifier::Linear => {
                let scaler = Scaler::fit(&train_x);
                let mut z = DesignMatrix::zeros(train_x.n_rows(), train_x.n_cols());
                for (r, row) in train_rows.iter().enumerate() {
                    scaler.transform_into(row, z.row_mut(r));
                }
                let train_labels: Vec<bool> = train_idx.iter().map(|&i| labels[i]).collect();
                let (w, b0) = fit_logistic(&z, &train_labels, cfg.ridge)?;
                let mut zq = vec![0.0; train_x.n_cols()];
                for &i in &val_idx {
                    scaler.transform_into(rows[i], &mut zq);
                    let margin: f64 =
                        w.iter().zip(&zq).map(|(wv, zv)| wv * zv).sum::<f64>() + b0;
                    scores[i] = 1.0 / (1.0 + (-margin).exp());
                }
            }
            D3Classifier::Knn => {
                let train_y: Vec<f64> = train_idx
                    .iter()
                    .map(|&i| if labels[i] { 1.0 } else { 0.0 })
                    .collect();
                let k = cfg.k.min(train_x.n_rows());
                let model = KnnModel::fit(&train_x, &train_y, k)?;
                for &i in &val_idx {
                    scores[i] = model.predict(rows[i]);
                }
            }
        }
    }

    let labeled: Vec<LabeledScore> = scores
        .iter()
        .zip(&labels)
        .map(|(&score, &label)| LabeledScore { label, score })
        .collect();
    Ok(TwoSampleResult {
        statistic: roc_auc(&labeled)?,
        p_value: None,
        per_feature: None,
    })
}
