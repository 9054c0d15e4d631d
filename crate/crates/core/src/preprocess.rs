//! Temporal-dependency handling: standard-week template, last-week
//! differencing, week-aligned window pairs and lag features.

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::stream::{SensorStream, Window, SAMPLES_PER_WEEK};

/// Per-phase mean and population standard deviation over all full weeks:
/// a 672 x n template of the weekly pattern.
#[derive(Debug, Clone)]
pub struct StandardWeek {
    n_sensors: usize,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl StandardWeek {
    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    /// Mean at weekly phase `k` (0..672) for `sensor`.
    pub fn mean(&self, k: usize, sensor: usize) -> f64 {
        self.mean[k * self.n_sensors + sensor]
    }

    pub fn std(&self, k: usize, sensor: usize) -> f64 {
        self.std[k * self.n_sensors + sensor]
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    pub fn stds(&self) -> &[f64] {
        &self.std
    }
}

/// Compute the standard week from all full weeks of the stream. Phase is the
/// absolute sample index modulo 672; partial trailing weeks are excluded.
pub fn standard_week(stream: &SensorStream) -> Result<StandardWeek> {
    let weeks = stream.week_count();
    if weeks == 0 {
        return Err(Error::Size(format!(
            "standard week needs at least one full week, stream has {} samples",
            stream.len()
        )));
    }
    let n = stream.n_sensors();
    let mut mean = vec![0.0; SAMPLES_PER_WEEK * n];
    let mut sq = vec![0.0; SAMPLES_PER_WEEK * n];
    for w in 0..weeks {
        for i in 0..SAMPLES_PER_WEEK {
            let row = stream.row(w * SAMPLES_PER_WEEK + i);
            let phase = stream.t_of(w * SAMPLES_PER_WEEK + i) % SAMPLES_PER_WEEK;
            let base = phase * n;
            for (j, v) in row.iter().enumerate() {
                mean[base + j] += v;
                sq[base + j] += v * v;
            }
        }
    }
    let inv = 1.0 / weeks as f64;
    for (m, s) in mean.iter_mut().zip(sq.iter_mut()) {
        *m *= inv;
        // population variance; clamp tiny negatives from cancellation
        *s = (*s * inv - *m * *m).max(0.0).sqrt();
    }
    Ok(StandardWeek {
        n_sensors: n,
        mean,
        std: sq,
    })
}

/// Residual stream `x_j(t) - mean(t mod 672, j)`.
pub fn subtract_standard_week(stream: &SensorStream, template: &StandardWeek) -> Result<SensorStream> {
    let n = stream.n_sensors();
    if template.n_sensors() != n {
        return Err(Error::Shape(format!(
            "template width {} does not match stream width {n}",
            template.n_sensors()
        )));
    }
    let mut data = Vec::with_capacity(stream.len() * n);
    for i in 0..stream.len() {
        let phase = stream.t_of(i) % SAMPLES_PER_WEEK;
        let row = stream.row(i);
        for (j, v) in row.iter().enumerate() {
            data.push(v - template.mean(phase, j));
        }
    }
    SensorStream::from_rows(stream.sensor_ids().to_vec(), stream.start_t(), data)
}

/// Last-week differencing: `d_j(t) = x_j(t) - x_j(t - 672)` for t >= 672.
/// The output is one week shorter and starts one week later.
pub fn week_difference(stream: &SensorStream) -> Result<SensorStream> {
    let len = stream.len();
    if len <= SAMPLES_PER_WEEK {
        return Err(Error::Size(format!(
            "week differencing needs more than {SAMPLES_PER_WEEK} samples, got {len}"
        )));
    }
    let n = stream.n_sensors();
    let mut data = Vec::with_capacity((len - SAMPLES_PER_WEEK) * n);
    for i in SAMPLES_PER_WEEK..len {
        let cur = stream.row(i);
        let prev = stream.row(i - SAMPLES_PER_WEEK);
        for (c, p) in cur.iter().zip(prev) {
            data.push(c - p);
        }
    }
    SensorStream::from_rows(
        stream.sensor_ids().to_vec(),
        stream.start_t() + SAMPLES_PER_WEEK,
        data,
    )
}

/// Reference/test window pair around a split point: reference is
/// `[split - window_len, split)`, test is `[split, split + window_len)`.
pub fn window_pair(
    stream: &SensorStream,
    split: usize,
    window_len: usize,
) -> Result<(Window<'_>, Window<'_>)> {
    if window_len == 0 {
        return Err(Error::Range("window length must be positive".into()));
    }
    if split < window_len || split + window_len > stream.len() {
        return Err(Error::Range(format!(
            "split {split} with window {window_len} outside stream of length {}",
            stream.len()
        )));
    }
    Ok((
        stream.slice(split - window_len, window_len)?,
        stream.slice(split, window_len)?,
    ))
}

/// Ordered positive lag offsets used as forecast features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSpec {
    lags: Vec<usize>,
}

impl Default for LagSpec {
    fn default() -> Self {
        // previous step, one day, one week, two weeks
        Self {
            lags: vec![1, 96, 672, 1344],
        }
    }
}

impl LagSpec {
    pub fn new(lags: Vec<usize>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::Size("lag spec needs at least one lag".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &l in &lags {
            if l == 0 {
                return Err(Error::Value("lags must be positive".into()));
            }
            if !seen.insert(l) {
                return Err(Error::Value(format!("duplicate lag {l}")));
            }
        }
        Ok(Self { lags })
    }

    /// All lags 1..=max, for the relevance-profile experiment.
    pub fn full(max: usize) -> Result<Self> {
        Self::new((1..=max).collect())
    }

    pub fn lags(&self) -> &[usize] {
        &self.lags
    }

    pub fn max_lag(&self) -> usize {
        *self.lags.iter().max().unwrap()
    }
}

/// Lagged design matrix for one sensor: one row per target index
/// `t in [max_lag, len)` with features `x(t - lag)` per lag, target `x(t)`.
/// Row `r` corresponds to stream position `max_lag + r`.
pub fn lag_matrix(
    stream: &SensorStream,
    spec: &LagSpec,
    sensor: usize,
) -> Result<(DesignMatrix, Vec<f64>)> {
    let max_lag = spec.max_lag();
    let len = stream.len();
    if len <= max_lag {
        return Err(Error::Size(format!(
            "stream length {len} too short for max lag {max_lag}"
        )));
    }
    let series = stream.column(sensor);
    let rows = len - max_lag;
    let cols = spec.lags().len();
    let mut data = Vec::with_capacity(rows * cols);
    let mut targets = Vec::with_capacity(rows);
    for t in max_lag..len {
        for &lag in spec.lags() {
            data.push(series[t - lag]);
        }
        targets.push(series[t]);
    }
    Ok((DesignMatrix::from_vec(rows, cols, data)?, targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::SAMPLES_PER_DAY;

    fn stream_from_fn(n: usize, len: usize, f: impl Fn(usize, usize) -> f64) -> SensorStream {
        let ids = (0..n).map(|j| format!("s{j}")).collect();
        let mut data = Vec::with_capacity(len * n);
        for t in 0..len {
            for j in 0..n {
                data.push(f(t, j));
            }
        }
        SensorStream::from_rows(ids, 0, data).unwrap()
    }

    #[test]
    fn constant_week_template() {
        // A stream that repeats one fixed week: mean equals that week, std 0.
        let week: Vec<f64> = (0..SAMPLES_PER_WEEK).map(|k| (k % 37) as f64).collect();
        let s = stream_from_fn(2, 3 * SAMPLES_PER_WEEK, |t, j| {
            week[t % SAMPLES_PER_WEEK] + j as f64
        });
        let sw = standard_week(&s).unwrap();
        for k in 0..SAMPLES_PER_WEEK {
            for j in 0..2 {
                assert_eq!(sw.mean(k, j), week[k] + j as f64);
                assert_eq!(sw.std(k, j), 0.0);
            }
        }
    }

    #[test]
    fn two_week_template_statistics() {
        // Weeks w and w+c: mean w + c/2, std c/2.
        let c = 4.0;
        let s = stream_from_fn(1, 2 * SAMPLES_PER_WEEK, |t, _| {
            let w = (t % SAMPLES_PER_WEEK) as f64;
            if t < SAMPLES_PER_WEEK {
                w
            } else {
                w + c
            }
        });
        let sw = standard_week(&s).unwrap();
        for k in 0..SAMPLES_PER_WEEK {
            assert!((sw.mean(k, 0) - (k as f64 + c / 2.0)).abs() < 1e-12);
            assert!((sw.std(k, 0) - c / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short_stream_is_size_error() {
        let s = stream_from_fn(1, SAMPLES_PER_WEEK - 1, |t, _| t as f64);
        assert!(matches!(standard_week(&s), Err(Error::Size(_))));
    }

    #[test]
    fn residuals_of_tiled_template_are_zero() {
        let s = stream_from_fn(2, 2 * SAMPLES_PER_WEEK, |t, j| {
            ((t % SAMPLES_PER_WEEK) as f64).sin() + j as f64
        });
        let sw = standard_week(&s).unwrap();
        let r = subtract_standard_week(&s, &sw).unwrap();
        assert!(r.rows().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn residual_shift_is_linear() {
        let s = stream_from_fn(1, 2 * SAMPLES_PER_WEEK, |t, _| (t as f64 * 0.01).sin());
        let sw = standard_week(&s).unwrap();
        let shifted = stream_from_fn(1, 2 * SAMPLES_PER_WEEK, |t, _| (t as f64 * 0.01).sin() + 5.0);
        let r0 = subtract_standard_week(&s, &sw).unwrap();
        let r1 = subtract_standard_week(&shifted, &sw).unwrap();
        for i in 0..r0.len() {
            assert!((r1.value(i, 0) - r0.value(i, 0) - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_template_is_zero_mean() {
        let s = stream_from_fn(1, 4 * SAMPLES_PER_WEEK, |t, _| {
            (t as f64 * 0.31).sin() + 0.1 * t as f64
        });
        let sw = standard_week(&s).unwrap();
        let r = subtract_standard_week(&s, &sw).unwrap();
        let rw = standard_week(&r).unwrap();
        let scale = s.rows().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..SAMPLES_PER_WEEK {
            assert!(rw.mean(k, 0).abs() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn week_periodic_stream_differences_to_zero() {
        let s = stream_from_fn(2, 3 * SAMPLES_PER_WEEK, |t, j| {
            ((t % SAMPLES_PER_WEEK) as f64 * 0.1).cos() + j as f64
        });
        let d = week_difference(&s).unwrap();
        assert_eq!(d.len(), 2 * SAMPLES_PER_WEEK);
        assert_eq!(d.start_t(), SAMPLES_PER_WEEK);
        assert!(d.rows().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_trend_differences_to_constant() {
        let a = 0.001;
        let s = stream_from_fn(1, 2 * SAMPLES_PER_WEEK + 10, |t, _| a * t as f64);
        let d = week_difference(&s).unwrap();
        for i in 0..d.len() {
            assert!((d.value(i, 0) - a * SAMPLES_PER_WEEK as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn week_difference_ignores_constant_shift() {
        let s0 = stream_from_fn(1, 2 * SAMPLES_PER_WEEK + 5, |t, _| (t as f64 * 0.37).sin());
        let s1 = stream_from_fn(1, 2 * SAMPLES_PER_WEEK + 5, |t, _| (t as f64 * 0.37).sin() + 11.0);
        let d0 = week_difference(&s0).unwrap();
        let d1 = week_difference(&s1).unwrap();
        for i in 0..d0.len() {
            assert!((d0.value(i, 0) - d1.value(i, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn too_short_for_week_difference() {
        let s = stream_from_fn(1, SAMPLES_PER_WEEK, |t, _| t as f64);
        assert!(matches!(week_difference(&s), Err(Error::Size(_))));
    }

    #[test]
    fn window_pair_partitions_two_weeks() {
        let s = stream_from_fn(1, 2 * SAMPLES_PER_WEEK, |t, _| t as f64);
        let (r, t) = window_pair(&s, SAMPLES_PER_WEEK, SAMPLES_PER_WEEK).unwrap();
        assert_eq!(r.start(), 0);
        assert_eq!(r.len(), SAMPLES_PER_WEEK);
        assert_eq!(t.start(), SAMPLES_PER_WEEK);
        assert_eq!(t.len(), SAMPLES_PER_WEEK);
    }

    #[test]
    fn window_pair_bounds() {
        let s = stream_from_fn(1, 2 * SAMPLES_PER_WEEK, |t, _| t as f64);
        assert!(matches!(
            window_pair(&s, SAMPLES_PER_WEEK - 1, SAMPLES_PER_WEEK),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            window_pair(&s, SAMPLES_PER_WEEK + 1, SAMPLES_PER_WEEK),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn lag_matrix_single_lag() {
        let s = stream_from_fn(1, 4, |t, _| (t + 1) as f64);
        let spec = LagSpec::new(vec![1]).unwrap();
        let (x, y) = lag_matrix(&s, &spec, 0).unwrap();
        assert_eq!(x.n_rows(), 3);
        assert_eq!(x.row(0), &[1.0]);
        assert_eq!(x.row(1), &[2.0]);
        assert_eq!(x.row(2), &[3.0]);
        assert_eq!(y, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn lag_matrix_constant_stream() {
        let s = stream_from_fn(1, 100, |_, _| 3.5);
        let spec = LagSpec::default();
        // too short for max lag 1344
        assert!(matches!(lag_matrix(&s, &spec, 0), Err(Error::Size(_))));
        let s = stream_from_fn(1, 1500, |_, _| 3.5);
        let (x, y) = lag_matrix(&s, &spec, 0).unwrap();
        for (row, target) in x.rows_iter().zip(&y) {
            for v in row {
                assert_eq!(v, target);
            }
        }
    }

    #[test]
    fn lag_matrix_row_count_three_weeks() {
        let len = 3 * SAMPLES_PER_WEEK;
        let s = stream_from_fn(1, len, |t, _| t as f64);
        let (x, _) = lag_matrix(&s, &LagSpec::default(), 0).unwrap();
        assert_eq!(x.n_rows(), 21 * SAMPLES_PER_DAY - 1344);
        assert_eq!(x.n_rows(), len - 1344);
    }
}
