//! Experiment runners for the three studies plus the ShapeDD analysis.
//!
//! Every runner is a pure function of (config, master_seed): scenario seeds
//! are derived per index, work items are evaluated independently (rayon) and
//! collected in index order, so outputs are identical for any --jobs value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use aquadrift_core::distdetect::{
    d3_score, hsic_test, ks_feature_wise, mmd_curve, mmd_test, shape_curve, D3Classifier,
    D3Config, KernelSpec, ShapeCandidate,
};
use aquadrift_core::localize::{localization_metrics, pvalue_map, select_sensor};
use aquadrift_core::modelloss::{
    evaluate_fold, fit_elastic_net, relevance_profile, roc_auc, RegressorKind, RelevanceProfile,
    TaskKind, FOLD_TRAIN_LEN,
};
use aquadrift_core::preprocess::{window_pair, LagSpec};
use aquadrift_core::scenario::{generate_scenario, generate_stream, LeakScenario, LeakSpec};
use aquadrift_core::stream::{LabeledScore, SensorStream, SAMPLES_PER_DAY};
use aquadrift_core::{Error, Result};

use crate::config::{DetectorKind, ExperimentConfig};
use crate::plan::{build_graph, leak_edges, scenario_seed};

// ---------------------------------------------------------------------------
// shared statistics helpers
// ---------------------------------------------------------------------------

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
    (mean, var.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn size_key(size_mm: f64) -> i64 {
    (size_mm * 1000.0).round() as i64
}

// ---------------------------------------------------------------------------
// model-loss study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModellossRecord {
    pub replicate: usize,
    pub fold: usize,
    pub model: RegressorKind,
    pub task: TaskKind,
    pub size_mm: f64,
    pub auc: f64,
    pub mse: f64,
    pub mse_baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModellossSweepRow {
    pub model: String,
    pub task: String,
    pub size_mm: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub auc_median: f64,
    pub mse_mean: f64,
    pub mse_baseline_mean: f64,
    pub n: usize,
}

#[derive(Debug)]
pub struct ModellossOutput {
    pub records: Vec<ModellossRecord>,
    pub sweep: Vec<ModellossSweepRow>,
    pub relevance: RelevanceProfile,
}

pub fn aggregate_modelloss(records: &[ModellossRecord]) -> Vec<ModellossSweepRow> {
    let mut groups: BTreeMap<(String, String, i64), Vec<&ModellossRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.model.name().into(), r.task.name().into(), size_key(r.size_mm)))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((model, task, key), rs)| {
            let aucs: Vec<f64> = rs.iter().map(|r| r.auc).collect();
            let mses: Vec<f64> = rs.iter().map(|r| r.mse).collect();
            let base: Vec<f64> = rs.iter().map(|r| r.mse_baseline).collect();
            let (auc_mean, auc_std) = mean_std(&aucs);
            ModellossSweepRow {
                model,
                task,
                size_mm: key as f64 / 1000.0,
                auc_mean,
                auc_std,
                auc_median: median(&aucs),
                mse_mean: mean_std(&mses).0,
                mse_baseline_mean: mean_std(&base).0,
                n: rs.len(),
            }
        })
        .collect()
}

/// Fold starts: non-overlapping two-week blocks beginning after the first
/// two weeks (so any forecast lag up to two weeks has history).
pub fn fold_starts(stream_len: usize, max_folds: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut s = FOLD_TRAIN_LEN;
    while s + FOLD_TRAIN_LEN <= stream_len && starts.len() < max_folds {
        starts.push(s);
        s += FOLD_TRAIN_LEN;
    }
    starts
}

/// The five-step fold evaluation over every (fold, model, task) cell, plus
/// the elastic-net relevance profile of the forecast task.
pub fn run_modelloss(cfg: &ExperimentConfig) -> Result<ModellossOutput> {
    let graph = build_graph(cfg)?;
    let forecast_spec = LagSpec::new(cfg.forecast_lags.clone())?;
    let starts = fold_starts(cfg.stream_len(), cfg.folds);
    if starts.is_empty() {
        return Err(Error::Size(format!(
            "stream of {} days is too short for a single two-week fold plus history",
            cfg.generator.days
        )));
    }

    let mut records = Vec::new();
    let mut relevance_runs = Vec::new();
    for replicate in 0..cfg.replicates {
        // Scenarios share the replicate baseline's seed: same noise, same
        // phases, leaks differing only by (pipe, diameter).
        let base_seed = scenario_seed(cfg.master_seed, "modelloss", replicate, 0);
        let baseline = generate_stream(&graph, &cfg.generator, None, base_seed)?;
        let edges = leak_edges(cfg, &graph, replicate)?;
        let onset = cfg.onset();

        let mut scenarios: Vec<LeakScenario> = Vec::new();
        for j in 0..cfg.scenarios_per_size {
            let edge = &edges[j % edges.len()];
            for &size in &cfg.sizes_mm {
                let leak = LeakSpec {
                    edge_id: edge.clone(),
                    diameter_mm: size,
                    onset,
                };
                scenarios.push(generate_scenario(&graph, &cfg.generator, &leak, base_seed)?);
            }
        }
        let scenario_refs: Vec<&LeakScenario> = scenarios.iter().collect();

        let mut cells = Vec::new();
        for &fold in &starts {
            for &model in &cfg.models {
                for &task in &cfg.tasks {
                    cells.push((fold, model, task));
                }
            }
        }
        let fold_results: Vec<Result<_>> = cells
            .par_iter()
            .map(|&(fold, model, task)| {
                evaluate_fold(
                    &baseline,
                    &scenario_refs,
                    model,
                    task,
                    fold,
                    &cfg.model_params,
                    &forecast_spec,
                )
            })
            .collect();
        for result in fold_results {
            let fr = result?;
            for ((size, auc), (_, mse)) in fr.auc_by_size.iter().zip(&fr.mse_by_size) {
                records.push(ModellossRecord {
                    replicate,
                    fold: fr.fold_start,
                    model: fr.model,
                    task: fr.task,
                    size_mm: *size,
                    auc: *auc,
                    mse: *mse,
                    mse_baseline: fr.mse_baseline,
                });
            }
        }

        // Relevance profile: full two-week lag range on the forecast task,
        // one elastic-net run per sensor (capped), on the dedicated
        // relevance generator variant (leak-free).
        let mut rel_gen = cfg.generator.clone();
        rel_gen.daily_amplitude = cfg.relevance.daily_amplitude;
        rel_gen.weekend_attenuation = cfg.relevance.weekend_attenuation;
        rel_gen.seasonal_amplitude = cfg.relevance.seasonal_amplitude;
        rel_gen.noise_std = cfg.relevance.noise_std;
        let rel_full = generate_stream(&graph, &rel_gen, None, base_seed)?;
        let rel_spec = LagSpec::full(FOLD_TRAIN_LEN)?;
        let rel_len = rel_full.len().min(4 * FOLD_TRAIN_LEN);
        let rel_stream = rel_full
            .slice(rel_full.len() - rel_len, rel_len)?
            .to_stream();
        let n_runs = rel_stream.n_sensors().min(cfg.relevance.runs);
        let runs: Vec<Result<_>> = (0..n_runs)
            .into_par_iter()
            .map(|sensor| {
                let data =
                    aquadrift_core::modelloss::build_task(&rel_stream, TaskKind::Forecast, sensor, &rel_spec)?;
                fit_elastic_net(
                    &data.x,
                    &data.y,
                    cfg.relevance.alpha,
                    cfg.relevance.l1_ratio,
                    cfg.relevance.max_iter,
                    cfg.relevance.tol,
                )
            })
            .collect();
        for run in runs {
            relevance_runs.push(run?);
        }
    }

    let rel_spec = LagSpec::full(FOLD_TRAIN_LEN)?;
    let run_refs: Vec<_> = relevance_runs.iter().collect();
    let relevance = relevance_profile(&run_refs, &rel_spec)?;
    let sweep = aggregate_modelloss(&records);
    Ok(ModellossOutput {
        records,
        sweep,
        relevance,
    })
}

// ---------------------------------------------------------------------------
// distribution-detector study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistRecord {
    pub replicate: usize,
    pub scenario: usize,
    pub size_mm: f64,
    pub displacement_days: usize,
    pub detector: DetectorKind,
    pub score_leak: f64,
    pub score_baseline: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistSweepRow {
    pub detector: String,
    pub size_mm: f64,
    pub displacement_days: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub auc_median: f64,
    pub n_replicates: usize,
}

#[derive(Debug)]
pub struct DistOutput {
    pub records: Vec<DistRecord>,
    pub sweep: Vec<DistSweepRow>,
}

/// One detector evaluation on a window pair; detectors emit the continuous
/// score used by the sweep AUC (1 - p for tests, classifier AUC for D3).
fn detector_score(
    cfg: &ExperimentConfig,
    det: DetectorKind,
    reference: &aquadrift_core::Window,
    test: &aquadrift_core::Window,
    seed: u64,
) -> Result<f64> {
    let kernel = KernelSpec::default();
    Ok(match det {
        DetectorKind::Ks => 1.0 - ks_feature_wise(reference, test)?.p_value.unwrap(),
        DetectorKind::Mmd => {
            1.0 - mmd_test(reference, test, &kernel, cfg.n_perm, seed)?
                .p_value
                .unwrap()
        }
        DetectorKind::D3Linear => {
            let d3 = D3Config {
                classifier: D3Classifier::Linear,
                ..cfg.d3.clone()
            };
            d3_score(reference, test, &d3, seed)?.statistic
        }
        DetectorKind::D3Knn => {
            let d3 = D3Config {
                classifier: D3Classifier::Knn,
                ..cfg.d3.clone()
            };
            d3_score(reference, test, &d3, seed)?.statistic
        }
        DetectorKind::Dawidd => {
            1.0 - hsic_test(reference, test, &kernel, cfg.n_perm, seed, cfg.dawidd_subsample)?
                .p_value
                .unwrap()
        }
    })
}

pub fn aggregate_dist(records: &[DistRecord]) -> Result<Vec<DistSweepRow>> {
    // group scores per (detector, size, displacement, replicate)
    type Key = (String, i64, usize);
    let mut groups: BTreeMap<Key, BTreeMap<usize, Vec<&DistRecord>>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.detector.name().into(), size_key(r.size_mm), r.displacement_days))
            .or_default()
            .entry(r.replicate)
            .or_default()
            .push(r);
    }
    let mut rows = Vec::new();
    for ((detector, key, displacement_days), by_replicate) in groups {
        let mut aucs = Vec::new();
        for rs in by_replicate.values() {
            let mut scores = Vec::with_capacity(rs.len() * 2);
            for r in rs.iter() {
                scores.push(LabeledScore {
                    label: true,
                    score: r.score_leak,
                });
                scores.push(LabeledScore {
                    label: false,
                    score: r.score_baseline,
                });
            }
            aucs.push(roc_auc(&scores)?);
        }
        let (auc_mean, auc_std) = mean_std(&aucs);
        rows.push(DistSweepRow {
            detector,
            size_mm: key as f64 / 1000.0,
            displacement_days,
            auc_mean,
            auc_std,
            auc_median: median(&aucs),
            n_replicates: aucs.len(),
        });
    }
    Ok(rows)
}

/// Displacement/size sweep: positive scores from leak streams split at
/// `onset + displacement`, negatives from the paired leak-free streams at
/// the identical split.
pub fn run_distribution(cfg: &ExperimentConfig) -> Result<DistOutput> {
    let graph = build_graph(cfg)?;
    let onset = cfg.onset();
    let n_sizes = cfg.sizes_mm.len();
    let n_disp = cfg.displacements_days.len();
    let n_det = cfg.detectors.len();

    let mut records = Vec::new();
    for replicate in 0..cfg.replicates {
        let edges = leak_edges(cfg, &graph, replicate)?;
        let per_scenario: Vec<Result<Vec<DistRecord>>> = (0..cfg.scenarios_per_size)
            .into_par_iter()
            .map(|j| {
                let seed = scenario_seed(cfg.master_seed, "dist", replicate, j);
                let edge = &edges[j % edges.len()];
                let baseline = generate_stream(&graph, &cfg.generator, None, seed)?;
                let mut out = Vec::with_capacity(n_sizes * n_disp * n_det);
                for (si, &size) in cfg.sizes_mm.iter().enumerate() {
                    let leak = LeakSpec {
                        edge_id: edge.clone(),
                        diameter_mm: size,
                        onset,
                    };
                    let stream = generate_stream(&graph, &cfg.generator, Some(&leak), seed)?;
                    for (di, &delta) in cfg.displacements_days.iter().enumerate() {
                        let split = onset + delta * SAMPLES_PER_DAY;
                        let (pos_ref, pos_test) = window_pair(&stream, split, cfg.window_len)?;
                        let (neg_ref, neg_test) = window_pair(&baseline, split, cfg.window_len)?;
                        for (ki, &det) in cfg.detectors.iter().enumerate() {
                            let base = ((j * n_sizes + si) * n_disp + di) * n_det + ki;
                            let pos_seed = scenario_seed(
                                cfg.master_seed,
                                "detector",
                                replicate,
                                base * 2,
                            );
                            let neg_seed = scenario_seed(
                                cfg.master_seed,
                                "detector",
                                replicate,
                                base * 2 + 1,
                            );
                            out.push(DistRecord {
                                replicate,
                                scenario: j,
                                size_mm: size,
                                displacement_days: delta,
                                detector: det,
                                score_leak: detector_score(cfg, det, &pos_ref, &pos_test, pos_seed)?,
                                score_baseline: detector_score(
                                    cfg, det, &neg_ref, &neg_test, neg_seed,
                                )?,
                            });
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        for r in per_scenario {
            records.extend(r?);
        }
    }
    let sweep = aggregate_dist(&records)?;
    Ok(DistOutput { records, sweep })
}

// ---------------------------------------------------------------------------
// localization study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocRecord {
    pub replicate: usize,
    pub scenario: usize,
    pub size_mm: f64,
    pub s_star: String,
    pub v: String,
    pub dist_m: f64,
    pub n_closer: usize,
    pub rel_dist: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocSweepRow {
    pub size_mm: f64,
    pub dist_mean: f64,
    pub dist_std: f64,
    pub rel_d_mean: f64,
    pub rel_d_std: f64,
    pub n_closer_mean: f64,
    pub n_closer_std: f64,
    pub n: usize,
}

#[derive(Debug)]
pub struct LocOutput {
    pub records: Vec<LocRecord>,
    pub sweep: Vec<LocSweepRow>,
}

pub fn aggregate_loc(records: &[LocRecord]) -> Vec<LocSweepRow> {
    let mut groups: BTreeMap<i64, Vec<&LocRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(size_key(r.size_mm)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let dist: Vec<f64> = rs.iter().map(|r| r.dist_m).collect();
            let rel: Vec<f64> = rs.iter().filter_map(|r| r.rel_dist).collect();
            let ncl: Vec<f64> = rs.iter().map(|r| r.n_closer as f64).collect();
            let (dist_mean, dist_std) = mean_std(&dist);
            let (rel_d_mean, rel_d_std) = mean_std(&rel);
            let (n_closer_mean, n_closer_std) = mean_std(&ncl);
            LocSweepRow {
                size_mm: key as f64 / 1000.0,
                dist_mean,
                dist_std,
                rel_d_mean,
                rel_d_std,
                n_closer_mean,
                n_closer_std,
                n: rs.len(),
            }
        })
        .collect()
}

/// Localization table: per scenario, the per-sensor KS p-value map at the
/// onset split, the smallest-p sensor, and the graph metrics against the
/// true (virtual midpoint) leak node.
pub fn run_localization(cfg: &ExperimentConfig) -> Result<LocOutput> {
    if !cfg.detectors.contains(&DetectorKind::Ks) {
        return Err(Error::Contract(
            "localization needs the ks detector enabled".into(),
        ));
    }
    let graph = build_graph(cfg)?;
    let onset = cfg.onset();

    let mut records = Vec::new();
    for replicate in 0..cfg.replicates {
        let edges = leak_edges(cfg, &graph, replicate)?;
        let per_scenario: Vec<Result<Vec<LocRecord>>> = (0..cfg.loc_scenarios_per_size)
            .into_par_iter()
            .map(|j| {
                let seed = scenario_seed(cfg.master_seed, "localize", replicate, j);
                let edge = &edges[j % edges.len()];
                let (split_graph, _) = graph.split_pipe(edge)?;
                let mut out = Vec::new();
                for &size in &cfg.sizes_mm {
                    let leak = LeakSpec {
                        edge_id: edge.clone(),
                        diameter_mm: size,
                        onset,
                    };
                    let scenario = generate_scenario(&graph, &cfg.generator, &leak, seed)?;
                    let (reference, test) = window_pair(&scenario.stream, onset, cfg.window_len)?;
                    let pmap = pvalue_map(&reference, &test)?;
                    let sensor = select_sensor(&pmap)?;
                    let sensor_id = scenario.stream.sensor_ids()[sensor].clone();
                    let metrics =
                        localization_metrics(&split_graph, &sensor_id, &scenario.leak_node)?;
                    out.push(LocRecord {
                        replicate,
                        scenario: j,
                        size_mm: size,
                        s_star: sensor_id,
                        v: scenario.leak_node.clone(),
                        dist_m: metrics.dist_m,
                        n_closer: metrics.n_closer,
                        rel_dist: metrics.rel_dist,
                    });
                }
                Ok(out)
            })
            .collect();
        for r in per_scenario {
            records.extend(r?);
        }
    }
    let sweep = aggregate_loc(&records);
    Ok(LocOutput { records, sweep })
}

// ---------------------------------------------------------------------------
// ShapeDD window study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ShapeCurveOut {
    pub label: String,
    pub window_days: usize,
    pub stress: bool,
    pub onset: usize,
    pub positions: Vec<usize>,
    pub magnitude: Vec<f64>,
    pub shape: Vec<f64>,
    pub candidates: Vec<ShapeCandidate>,
}

#[derive(Debug)]
pub struct ShapeOutput {
    pub curves: Vec<ShapeCurveOut>,
}

fn shape_curve_for(
    stream: &SensorStream,
    window_days: usize,
    step: usize,
    half_width: usize,
    label: String,
    stress: bool,
    onset: usize,
) -> Result<ShapeCurveOut> {
    let window_len = window_days * SAMPLES_PER_DAY;
    let m = mmd_curve(stream, window_len, step, &KernelSpec::default())?;
    let s = shape_curve(&m, half_width)?;
    Ok(ShapeCurveOut {
        label,
        window_days,
        stress,
        onset,
        positions: s.positions,
        magnitude: s.magnitude,
        shape: s.shape,
        candidates: s.candidates,
    })
}

/// ShapeDD analysis on one chosen scenario: a magnitude/shape curve per
/// window length, plus a stress variant with amplified seasonal trend.
pub fn run_shape(cfg: &ExperimentConfig) -> Result<ShapeOutput> {
    let graph = build_graph(cfg)?;
    let edges = leak_edges(cfg, &graph, 0)?;
    let onset = cfg.onset();
    let seed = scenario_seed(cfg.master_seed, "shape", 0, 0);
    let leak = LeakSpec {
        edge_id: edges[0].clone(),
        diameter_mm: cfg.shape.scenario_size_mm,
        onset,
    };
    let stream = generate_stream(&graph, &cfg.generator, Some(&leak), seed)?;

    let mut curves: Vec<Result<ShapeCurveOut>> = cfg
        .shape
        .window_days
        .par_iter()
        .map(|&days| {
            shape_curve_for(
                &stream,
                days,
                cfg.shape.step,
                cfg.shape.half_width,
                format!("{days}d"),
                false,
                onset,
            )
        })
        .collect();

    let mut stress_gen = cfg.generator.clone();
    stress_gen.seasonal_amplitude *= cfg.shape.stress_seasonal_factor;
    stress_gen.days = cfg.shape.stress_days;
    let stress_leak = LeakSpec {
        edge_id: edges[0].clone(),
        diameter_mm: cfg.shape.stress_size_mm,
        onset,
    };
    let stress_stream = generate_stream(&graph, &stress_gen, Some(&stress_leak), seed)?;
    curves.push(shape_curve_for(
        &stress_stream,
        cfg.shape.stress_window_days,
        cfg.shape.step,
        cfg.shape.half_width,
        format!("stress_{}d", cfg.shape.stress_window_days),
        true,
        onset,
    ));

    let mut out = Vec::with_capacity(curves.len());
    for c in curves.drain(..) {
        out.push(c?);
    }
    Ok(ShapeOutput { curves: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_helpers() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (1.25f64).sqrt()).abs() < 1e-15);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn fold_grid_examples() {
        assert_eq!(fold_starts(5376, 10), vec![1344, 2688, 4032]);
        assert_eq!(fold_starts(5376, 2), vec![1344, 2688]);
        assert!(fold_starts(2000, 3).is_empty());
    }
}
