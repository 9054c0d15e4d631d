//! Seeded end-to-end behavior of the surrogate generator as seen by the
//! preprocessing, detection and localization layers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use aquadrift_core::distdetect::{ks_feature_wise, mmd_curve, KernelSpec};
use aquadrift_core::localize::{pvalue_map, select_sensor};
use aquadrift_core::modelloss::{
    error_series, evaluate_fold, fit_task, pooled_error_series, Provenance, RegressorKind,
    TaskKind,
};
use aquadrift_core::preprocess::{standard_week, subtract_standard_week, week_difference, window_pair, LagSpec};
use aquadrift_core::scenario::{
    generate_scenario, generate_stream, synthetic_grid, GeneratorConfig, LeakSpec,
};
use aquadrift_core::stream::{SensorStream, SAMPLES_PER_DAY, SAMPLES_PER_WEEK};
use aquadrift_core::WdnGraph;

fn grid() -> WdnGraph {
    synthetic_grid(6, 6, 6, (80.0, 120.0), 3).unwrap()
}

fn cfg(days: usize) -> GeneratorConfig {
    GeneratorConfig {
        n_sensors: 6,
        days,
        ..GeneratorConfig::default()
    }
}

/// Least-squares fit of `a cos(w t) + b sin(w t)` at the seasonal frequency;
/// returns the amplitude sqrt(a^2 + b^2).
fn seasonal_fit_amplitude(series: &[f64], t0: usize) -> f64 {
    let omega = std::f64::consts::TAU / (364.0 * SAMPLES_PER_DAY as f64);
    let (mut cc, mut cs, mut ss, mut cy, mut sy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in series.iter().enumerate() {
        let t = (t0 + i) as f64;
        let (s, c) = (omega * t).sin_cos();
        cc += c * c;
        cs += c * s;
        ss += s * s;
        cy += c * v;
        sy += s * v;
    }
    let det = cc * ss - cs * cs;
    let a = (cy * ss - sy * cs) / det;
    let b = (sy * cc - cy * cs) / det;
    (a * a + b * b).sqrt()
}

#[test]
fn standard_week_std_small_relative_to_daily_amplitude() {
    let g = grid();
    let c = cfg(364);
    let stream = generate_stream(&g, &c, None, 1).unwrap();
    let sw = standard_week(&stream).unwrap();
    let max_std = sw.stds().iter().cloned().fold(0.0f64, f64::max);
    // weekly patterns are consistent across the year: the per-phase std is
    // noise plus a slice of the seasonal trend, well below the daily swing
    assert!(
        max_std < 0.4 * c.daily_amplitude,
        "max std {max_std} vs daily amplitude {}",
        c.daily_amplitude
    );
}

#[test]
fn residual_trend_is_seasonal_cosine_and_week_difference_shrinks_it() {
    let g = grid();
    let c = GeneratorConfig {
        seasonal_amplitude: 0.3,
        ..cfg(364)
    };
    let stream = generate_stream(&g, &c, None, 5).unwrap();
    let sw = standard_week(&stream).unwrap();
    let residuals = subtract_standard_week(&stream, &sw).unwrap();

    // mean across sensors per time step
    let means: Vec<f64> = (0..residuals.len())
        .map(|i| residuals.row(i).iter().sum::<f64>() / residuals.n_sensors() as f64)
        .collect();
    let amp = seasonal_fit_amplitude(&means, residuals.start_t());
    assert!(
        (amp - c.seasonal_amplitude).abs() < 0.2 * c.seasonal_amplitude,
        "fitted residual trend amplitude {amp} vs seasonal amplitude {}",
        c.seasonal_amplitude
    );

    // last-week differencing copes better with the long-term trend
    let diff = week_difference(&stream).unwrap();
    let diff_means: Vec<f64> = (0..diff.len())
        .map(|i| diff.row(i).iter().sum::<f64>() / diff.n_sensors() as f64)
        .collect();
    let diff_amp = seasonal_fit_amplitude(&diff_means, diff.start_t());
    assert!(
        diff_amp < 0.5 * amp,
        "week-differenced trend {diff_amp} not smaller than residual trend {amp}"
    );
}

#[test]
fn leak_week_pair_rejects_ks() {
    let g = grid();
    let c = cfg(35);
    let onset = 2 * SAMPLES_PER_WEEK;
    // a pipe incident to the first sensor node
    let sensor = g.sensors()[0];
    let edge = g
        .edges()
        .iter()
        .find(|e| e.a == sensor || e.b == sensor)
        .unwrap();
    let leak = LeakSpec {
        edge_id: edge.id.clone(),
        diameter_mm: 19.0,
        onset,
    };
    let stream = generate_stream(&g, &c, Some(&leak), 17).unwrap();
    let (reference, test) = window_pair(&stream, onset, SAMPLES_PER_WEEK).unwrap();
    let result = ks_feature_wise(&reference, &test).unwrap();
    assert!(
        result.p_value.unwrap() < 0.01,
        "combined p {}",
        result.p_value.unwrap()
    );
}

#[test]
fn interpolation_explains_most_variance() {
    let g = grid();
    let c = cfg(21);
    let stream = generate_stream(&g, &c, None, 23).unwrap();
    let spec = LagSpec::new(vec![1]).unwrap();
    let model = fit_task(
        &stream,
        0..SAMPLES_PER_WEEK,
        TaskKind::Interpolate,
        RegressorKind::Ridge,
        &Default::default(),
        &spec,
    )
    .unwrap();
    let series = error_series(&model, &stream, 0, Provenance::Baseline).unwrap();
    let mse = series.mean();
    let col = stream.column(0);
    let mean = col.iter().sum::<f64>() / col.len() as f64;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
    assert!(
        mse < 0.1 * var,
        "interpolation MSE {mse} not well below target variance {var}"
    );
}

#[test]
fn post_onset_errors_exceed_pre_onset_for_19mm() {
    let g = grid();
    let c = cfg(42);
    let onset = 3 * SAMPLES_PER_WEEK;
    let base_seed = 29;
    let baseline = generate_stream(&g, &c, None, base_seed).unwrap();
    let leak = LeakSpec {
        edge_id: g.edges()[10].id.clone(),
        diameter_mm: 19.0,
        onset,
    };
    let scenario = generate_stream(&g, &c, Some(&leak), base_seed).unwrap();

    let spec = LagSpec::new(vec![1, 96, 672]).unwrap();
    let model = fit_task(
        &baseline,
        1344..2688,
        TaskKind::Interpolate,
        RegressorKind::Ridge,
        &Default::default(),
        &spec,
    )
    .unwrap();
    let series = pooled_error_series(&model, &scenario, Provenance::Leak).unwrap();
    let split = onset - series.first_t;
    let pre = &series.errors[..split];
    let post = &series.errors[split + SAMPLES_PER_DAY..];
    let pre_mean = pre.iter().sum::<f64>() / pre.len() as f64;
    let post_mean = post.iter().sum::<f64>() / post.len() as f64;
    assert!(
        post_mean > pre_mean,
        "post-onset mean {post_mean} not above pre-onset {pre_mean}"
    );
}

#[test]
fn ridge_training_error_below_held_out_error_in_majority_of_seeds() {
    let g = grid();
    let c = cfg(28);
    let spec = LagSpec::new(vec![1, 96]).unwrap();
    let mut wins = 0;
    let seeds = 12;
    for seed in 0..seeds {
        let stream = generate_stream(&g, &c, None, 100 + seed).unwrap();
        let range = 672..2016;
        let model = fit_task(
            &stream,
            range.clone(),
            TaskKind::Interpolate,
            RegressorKind::Ridge,
            &Default::default(),
            &spec,
        )
        .unwrap();
        let series = pooled_error_series(&model, &stream, Provenance::Baseline).unwrap();
        let (mut train_sum, mut train_n, mut held_sum, mut held_n) = (0.0, 0usize, 0.0, 0usize);
        for (i, e) in series.errors.iter().enumerate() {
            let t = series.first_t + i;
            if range.contains(&t) {
                train_sum += e;
                train_n += 1;
            } else {
                held_sum += e;
                held_n += 1;
            }
        }
        if train_sum / train_n as f64 <= held_sum / held_n as f64 {
            wins += 1;
        }
    }
    assert!(wins * 2 > seeds, "training error below held-out in only {wins}/{seeds} seeds");
}

#[test]
fn zero_diameter_fold_auc_is_near_half() {
    let g = grid();
    let c = cfg(42);
    let base_seed = 31;
    let baseline = generate_stream(&g, &c, None, base_seed).unwrap();
    let leak = LeakSpec {
        edge_id: g.edges()[0].id.clone(),
        diameter_mm: 0.0,
        onset: 2000,
    };
    let scenario = generate_scenario(&g, &c, &leak, base_seed).unwrap();
    let spec = LagSpec::new(vec![1, 96, 672]).unwrap();
    let result = evaluate_fold(
        &baseline,
        &[&scenario],
        RegressorKind::Ridge,
        TaskKind::Interpolate,
        1344,
        &Default::default(),
        &spec,
    )
    .unwrap();
    let (_, auc) = result.auc_by_size[0];
    assert!((auc - 0.5).abs() < 0.05, "diameter-0 AUC {auc}");
}

#[test]
fn argmin_p_sensor_is_near_the_leak() {
    // 19 mm leak, split at onset: the smallest-p sensor is one of the three
    // nearest sensors to the virtual leak node in at least 80% of seeds.
    let g = synthetic_grid(8, 8, 8, (80.0, 120.0), 5).unwrap();
    let c = GeneratorConfig {
        n_sensors: 8,
        days: 21,
        ..GeneratorConfig::default()
    };
    let onset = 2 * SAMPLES_PER_WEEK;
    let mut hits = 0;
    let trials = 25;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..trials {
        let edge = g.edges()[rng.gen_range(0..g.edges().len())].id.clone();
        let leak = LeakSpec {
            edge_id: edge.clone(),
            diameter_mm: 19.0,
            onset,
        };
        let scenario = generate_scenario(&g, &c, &leak, 500 + seed).unwrap();
        let (reference, test) = window_pair(&scenario.stream, onset, SAMPLES_PER_WEEK).unwrap();
        let pmap = pvalue_map(&reference, &test).unwrap();
        let chosen = select_sensor(&pmap).unwrap();

        let (split, mid) = g.split_pipe(&edge).unwrap();
        let table = split.shortest_paths(&mid).unwrap();
        let mut by_dist: Vec<(f64, usize)> = split
            .sensors()
            .iter()
            .enumerate()
            .map(|(j, &s)| (table.distance(s), j))
            .collect();
        by_dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if by_dist[..3].iter().any(|&(_, j)| j == chosen) {
            hits += 1;
        }
    }
    assert!(
        hits * 100 >= trials * 80,
        "argmin-p sensor within 3 nearest in only {hits}/{trials} trials"
    );
}

#[test]
fn day_window_magnitude_peaks_at_weekend_boundaries() {
    let g = grid();
    let c = cfg(28);
    let stream = generate_stream(&g, &c, None, 47).unwrap();
    let m = mmd_curve(&stream, SAMPLES_PER_DAY, 24, &KernelSpec::default()).unwrap();
    // the largest magnitudes should sit near day boundaries 5 (Fri|Sat) and
    // 0 (Sun|Mon) of each week, where the weekend attenuation switches
    let mut indexed: Vec<(f64, usize)> = m.values.iter().cloned().zip(m.positions.clone()).collect();
    indexed.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let top = &indexed[..6];
    for (value, pos) in top {
        let day_in_week = (pos / SAMPLES_PER_DAY) % 7;
        let off = pos % SAMPLES_PER_DAY;
        // a split near a weekend flank: day 5 or day 0 boundary, up to half a day off
        let near_flank = matches!(day_in_week, 0 | 5 | 6) || (day_in_week == 4 && off > SAMPLES_PER_DAY / 2);
        assert!(
            near_flank,
            "top magnitude {value} at position {pos} (day-in-week {day_in_week}) not at a weekend flank"
        );
    }
}

#[test]
fn stream_columns_are_finite_and_plausible() {
    let g = grid();
    let c = cfg(7);
    let stream = generate_stream(&g, &c, None, 3).unwrap();
    for row in stream.rows() {
        for v in row {
            assert!(v.is_finite());
            assert!((*v - c.base_pressure).abs() < 3.0);
        }
    }
    let _ = SensorStream::from_rows(
        stream.sensor_ids().to_vec(),
        0,
        stream.rows().flatten().copied().collect(),
    )
    .unwrap();
}
