//! Model-loss-based drift detection: fit a regressor on a leak-free
//! two-week block, freeze it, and score leaks by how far its squared
//! prediction errors drift. Detection quality is summarized as ROC-AUC over
//! pooled baseline/leak error series.

mod elastic_net;
mod knn;
mod linear;

pub use elastic_net::{fit_elastic_net, ElasticNetModel};
pub use knn::{knn_predict, KnnModel};
pub use linear::{
    expand_poly_row, fit_poly_ridge, fit_ridge, PolyRidgeModel, RidgeModel, Scaler,
    MAX_POLY_FEATURES,
};

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::preprocess::{lag_matrix, LagSpec};
use crate::scenario::LeakScenario;
use crate::stream::{LabeledScore, SensorStream, SAMPLES_PER_WEEK};

/// Regressor family used for the detection tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Knn,
    Ridge,
    PolyRidge,
    ElasticNet,
}

impl RegressorKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegressorKind::Knn => "knn",
            RegressorKind::Ridge => "ridge",
            RegressorKind::PolyRidge => "poly_ridge",
            RegressorKind::ElasticNet => "elastic_net",
        }
    }
}

/// The two inference tasks a model can perform as a drift proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Predict a sensor's next value from its own lagged values.
    Forecast,
    /// Predict one sensor from all other sensors at the same time step.
    Interpolate,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Forecast => "forecast",
            TaskKind::Interpolate => "interpolate",
        }
    }
}

/// Hyperparameters for all regressor kinds; unused fields are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    pub k: usize,
    pub ridge_lambda: f64,
    pub poly_degree: usize,
    pub elastic_alpha: f64,
    pub elastic_l1_ratio: f64,
    pub elastic_max_iter: usize,
    pub elastic_tol: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            k: 5,
            ridge_lambda: 1.0,
            poly_degree: 2,
            elastic_alpha: 0.01,
            elastic_l1_ratio: 0.5,
            elastic_max_iter: 500,
            elastic_tol: 1e-6,
        }
    }
}

/// A fitted regressor of any kind.
#[derive(Debug, Clone)]
pub enum Model {
    Ridge(RidgeModel),
    Poly(PolyRidgeModel),
    Knn(KnnModel),
    ElasticNet(ElasticNetModel),
}

impl Model {
    pub fn fit(kind: RegressorKind, params: &ModelParams, x: &DesignMatrix, y: &[f64]) -> Result<Self> {
        Ok(match kind {
            RegressorKind::Ridge => Model::Ridge(fit_ridge(x, y, params.ridge_lambda)?),
            RegressorKind::PolyRidge => {
                Model::Poly(fit_poly_ridge(x, y, params.poly_degree, params.ridge_lambda)?)
            }
            RegressorKind::Knn => Model::Knn(KnnModel::fit(x, y, params.k.min(x.n_rows()))?),
            RegressorKind::ElasticNet => Model::ElasticNet(fit_elastic_net(
                x,
                y,
                params.elastic_alpha,
                params.elastic_l1_ratio,
                params.elastic_max_iter,
                params.elastic_tol,
            )?),
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Model::Ridge(m) => m.predict(row),
            Model::Poly(m) => m.predict(row),
            Model::Knn(m) => m.predict(row),
            Model::ElasticNet(m) => m.predict(row),
        }
    }
}

/// Task data: design matrix, targets, and the stream position of row 0.
#[derive(Debug, Clone)]
pub struct TaskData {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    /// Stream position of the first row; row r corresponds to `t0 + r`.
    pub t0: usize,
}

/// Build the regression dataset for one sensor and task over a full stream.
pub fn build_task(
    stream: &SensorStream,
    task: TaskKind,
    sensor: usize,
    spec: &LagSpec,
) -> Result<TaskData> {
    if sensor >= stream.n_sensors() {
        return Err(Error::Reference(format!(
            "sensor index {sensor} out of range ({} sensors)",
            stream.n_sensors()
        )));
    }
    match task {
        TaskKind::Forecast => {
            let (x, y) = lag_matrix(stream, spec, sensor)?;
            Ok(TaskData {
                x,
                y,
                t0: spec.max_lag(),
            })
        }
        TaskKind::Interpolate => {
            let n = stream.n_sensors();
            if n < 2 {
                return Err(Error::Size(
                    "interpolation needs at least two sensors".into(),
                ));
            }
            let len = stream.len();
            let mut data = Vec::with_capacity(len * (n - 1));
            let mut y = Vec::with_capacity(len);
            for row in stream.rows() {
                for (j, v) in row.iter().enumerate() {
                    if j != sensor {
                        data.push(*v);
                    }
                }
                y.push(row[sensor]);
            }
            Ok(TaskData {
                x: DesignMatrix::from_vec(len, n - 1, data)?,
                y,
                t0: 0,
            })
        }
    }
}

/// Squared prediction errors of one frozen model family over a stream,
/// aligned to stream positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    /// Stream position of the first error.
    pub first_t: usize,
    pub errors: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Baseline,
    Leak,
}

impl ErrorSeries {
    pub fn mean(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

/// A model family fitted per sensor for one task; frozen after fit.
#[derive(Debug, Clone)]
pub struct TaskModel {
    pub kind: RegressorKind,
    pub task: TaskKind,
    pub spec: LagSpec,
    n_sensors: usize,
    models: Vec<Model>,
}

impl TaskModel {
    pub fn models(&self) -> &[Model] {
        &self.models
    }
}

/// Fit one model per sensor on targets restricted to `target_range`
/// (stream positions). Forecast features may reach back before the range,
/// so the range start must be at least the max lag.
pub fn fit_task(
    stream: &SensorStream,
    target_range: Range<usize>,
    task: TaskKind,
    kind: RegressorKind,
    params: &ModelParams,
    spec: &LagSpec,
) -> Result<TaskModel> {
    if target_range.end > stream.len() || target_range.start >= target_range.end {
        return Err(Error::Range(format!(
            "target range {target_range:?} invalid for stream of length {}",
            stream.len()
        )));
    }
    let mut models = Vec::with_capacity(stream.n_sensors());
    for sensor in 0..stream.n_sensors() {
        let data = build_task(stream, task, sensor, spec)?;
        if target_range.start < data.t0 {
            return Err(Error::Size(format!(
                "target range starts at {} but task rows start at {} (max lag)",
                target_range.start, data.t0
            )));
        }
        let lo = target_range.start - data.t0;
        let hi = target_range.end - data.t0;
        let rows: Vec<Vec<f64>> = (lo..hi).map(|r| data.x.row(r).to_vec()).collect();
        let x = DesignMatrix::from_rows(&rows)?;
        let y = data.y[lo..hi].to_vec();
        models.push(Model::fit(kind, params, &x, &y)?);
    }
    Ok(TaskModel {
        kind,
        task,
        spec: spec.clone(),
        n_sensors: stream.n_sensors(),
        models,
    })
}

/// Squared prediction errors of one sensor's model over a whole stream.
pub fn error_series(
    model: &TaskModel,
    stream: &SensorStream,
    sensor: usize,
    provenance: Provenance,
) -> Result<ErrorSeries> {
    if stream.n_sensors() != model.n_sensors {
        return Err(Error::Contract(format!(
            "model fitted for {} sensors, stream has {}",
            model.n_sensors,
            stream.n_sensors()
        )));
    }
    if sensor >= model.n_sensors {
        return Err(Error::Reference(format!("sensor index {sensor} out of range")));
    }
    let data = build_task(stream, model.task, sensor, &model.spec)?;
    let m = &model.models[sensor];
    let errors = match m {
        // kNN prediction dominates the sweeps; standardize once per row and
        // skip the per-call scaler allocation.
        Model::Knn(knn) => {
            let mut z = vec![0.0; data.x.n_cols()];
            data.x
                .rows_iter()
                .zip(&data.y)
                .map(|(row, &target)| {
                    knn.standardize_into(row, &mut z);
                    let e = knn.predict_standardized(&z) - target;
                    e * e
                })
                .collect()
        }
        _ => data
            .x
            .rows_iter()
            .zip(&data.y)
            .map(|(row, &target)| {
                let e = m.predict(row) - target;
                e * e
            })
            .collect(),
    };
    Ok(ErrorSeries {
        first_t: data.t0,
        errors,
        provenance,
    })
}

/// Per-time-step squared errors pooled by mean over sensors.
pub fn pooled_error_series(
    model: &TaskModel,
    stream: &SensorStream,
    provenance: Provenance,
) -> Result<ErrorSeries> {
    let mut pooled: Option<ErrorSeries> = None;
    for sensor in 0..stream.n_sensors() {
        let series = error_series(model, stream, sensor, provenance)?;
        match &mut pooled {
            None => pooled = Some(series),
            Some(acc) => {
                debug_assert_eq!(acc.first_t, series.first_t);
                for (a, e) in acc.errors.iter_mut().zip(&series.errors) {
                    *a += e;
                }
            }
        }
    }
    let mut acc = pooled.expect("stream has at least one sensor");
    let inv = 1.0 / stream.n_sensors() as f64;
    acc.errors.iter_mut().for_each(|e| *e *= inv);
    Ok(acc)
}

/// ROC-AUC with ties counted 1/2: the probability that a uniformly random
/// positive outranks a uniformly random negative.
pub fn roc_auc(scores: &[LabeledScore]) -> Result<f64> {
    let n_pos = scores.iter().filter(|s| s.label).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "roc_auc needs both classes, got {n_pos} positives / {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .score
            .partial_cmp(&scores[b].score)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // Sweep tie groups in ascending score order; every positive beats the
    // negatives strictly below it and half-ties the negatives in its group.
    let mut wins = 0.0f64;
    let mut neg_below = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut pos_in_group = 0usize;
        let mut neg_in_group = 0usize;
        while j < order.len() && scores[order[j]].score == scores[order[i]].score {
            if scores[order[j]].label {
                pos_in_group += 1;
            } else {
                neg_in_group += 1;
            }
            j += 1;
        }
        wins += pos_in_group as f64 * neg_below as f64
            + 0.5 * pos_in_group as f64 * neg_in_group as f64;
        neg_below += neg_in_group;
        i = j;
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}

/// Result of one fold of the five-step evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold_start: usize,
    pub model: RegressorKind,
    pub task: TaskKind,
    /// (diameter_mm, ROC-AUC over pooled baseline/leak errors), per size.
    pub auc_by_size: Vec<(f64, f64)>,
    /// Mean squared error on the held-out baseline.
    pub mse_baseline: f64,
    /// (diameter_mm, mean squared error over that size's scenarios).
    pub mse_by_size: Vec<(f64, f64)>,
}

/// Train window length of one fold: two consecutive weeks.
pub const FOLD_TRAIN_LEN: usize = 2 * SAMPLES_PER_WEEK;

/// Run one fold: train on two consecutive weeks of the baseline, freeze the
/// model, score the remaining baseline (E0) and every scenario's full stream
/// (E1), then compute per-size ROC-AUC over the pooled labeled errors.
pub fn evaluate_fold(
    baseline: &SensorStream,
    scenarios: &[&LeakScenario],
    kind: RegressorKind,
    task: TaskKind,
    fold_start: usize,
    params: &ModelParams,
    spec: &LagSpec,
) -> Result<FoldResult> {
    let fold_end = fold_start + FOLD_TRAIN_LEN;
    if fold_end > baseline.len() {
        return Err(Error::Size(format!(
            "fold [{fold_start}, {fold_end}) exceeds baseline length {}",
            baseline.len()
        )));
    }
    let model = fit_task(baseline, fold_start..fold_end, task, kind, params, spec)?;

    let base_errors = pooled_error_series(&model, baseline, Provenance::Baseline)?;
    let e0: Vec<f64> = base_errors
        .errors
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let t = base_errors.first_t + i;
            t < fold_start || t >= fold_end
        })
        .map(|(_, e)| *e)
        .collect();
    if e0.is_empty() {
        return Err(Error::Size("no held-out baseline samples remain".into()));
    }
    let mse_baseline = e0.iter().sum::<f64>() / e0.len() as f64;

    let mut by_size: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for scenario in scenarios {
        if scenario.stream.n_sensors() != baseline.n_sensors() {
            return Err(Error::Contract(
                "scenario width does not match baseline".into(),
            ));
        }
        let e1 = pooled_error_series(&model, &scenario.stream, Provenance::Leak)?;
        by_size
            .entry((scenario.diameter_mm * 1000.0).round() as i64)
            .or_default()
            .extend(e1.errors);
    }

    let mut auc_by_size = Vec::with_capacity(by_size.len());
    let mut mse_by_size = Vec::with_capacity(by_size.len());
    for (key, leak_errors) in &by_size {
        let size = *key as f64 / 1000.0;
        let mut scores: Vec<LabeledScore> = Vec::with_capacity(e0.len() + leak_errors.len());
        scores.extend(e0.iter().map(|&e| LabeledScore { label: false, score: e }));
        scores.extend(leak_errors.iter().map(|&e| LabeledScore { label: true, score: e }));
        auc_by_size.push((size, roc_auc(&scores)?));
        mse_by_size.push((
            size,
            leak_errors.iter().sum::<f64>() / leak_errors.len() as f64,
        ));
    }
    Ok(FoldResult {
        fold_start,
        model: kind,
        task,
        auc_by_size,
        mse_baseline,
        mse_by_size,
    })
}

/// Mean and standard deviation of absolute weights per lag across runs.
#[derive(Debug, Clone, Serialize)]
pub struct RelevanceProfile {
    pub lags: Vec<usize>,
    pub mean_abs: Vec<f64>,
    pub std_abs: Vec<f64>,
}

impl RelevanceProfile {
    /// Lags ranked by descending mean absolute weight (ties: smaller lag).
    pub fn ranked_lags(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.lags.len()).collect();
        idx.sort_by(|&a, &b| {
            self.mean_abs[b]
                .partial_cmp(&self.mean_abs[a])
                .unwrap()
                .then(self.lags[a].cmp(&self.lags[b]))
        });
        idx.into_iter().map(|i| self.lags[i]).collect()
    }
}

/// Aggregate the absolute weight vectors of elastic-net runs sharing one
/// lag spec into a relevance profile.
pub fn relevance_profile(runs: &[&ElasticNetModel], spec: &LagSpec) -> Result<RelevanceProfile> {
    if runs.is_empty() {
        return Err(Error::Size("relevance profile needs at least one run".into()));
    }
    let p = spec.lags().len();
    for run in runs {
        if run.weights().len() != p {
            return Err(Error::Shape(format!(
                "run has {} weights, lag spec has {p}",
                run.weights().len()
            )));
        }
    }
    let mut mean_abs = vec![0.0; p];
    for run in runs {
        for (m, w) in mean_abs.iter_mut().zip(run.weights()) {
            *m += w.abs();
        }
    }
    let inv = 1.0 / runs.len() as f64;
    mean_abs.iter_mut().for_each(|m| *m *= inv);
    let mut std_abs = vec![0.0; p];
    for run in runs {
        for ((s, w), m) in std_abs.iter_mut().zip(run.weights()).zip(&mean_abs) {
            let d = w.abs() - m;
            *s += d * d;
        }
    }
    std_abs.iter_mut().for_each(|s| *s = (*s * inv).sqrt());
    Ok(RelevanceProfile {
        lags: spec.lags().to_vec(),
        mean_abs,
        std_abs,
    })
}
