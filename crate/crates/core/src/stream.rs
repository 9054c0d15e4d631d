//! Pressure streams, frames and week-aligned windows.
//!
//! Time is an integer sample index on a fixed 15-minute grid; wall-clock
//! timestamps only exist at I/O boundaries. A day is 96 samples, a week 672.
//! Streams start on a Monday; weekend days are days 5 and 6 of each 7-day
//! block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per day at 15-minute sampling.
pub const SAMPLES_PER_DAY: usize = 96;
/// Samples per week at 15-minute sampling.
pub const SAMPLES_PER_WEEK: usize = 672;
/// Default sampling interval in minutes.
pub const SAMPLE_INTERVAL_MIN: u32 = 15;

/// One multivariate pressure reading: sample index plus one value per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub t: usize,
    pub values: Vec<f64>,
}

impl SensorFrame {
    pub fn new(t: usize, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Value(format!("non-finite value {v} in frame t={t}")));
        }
        Ok(Self { t, values })
    }
}

/// A uniformly sampled multivariate pressure time series.
///
/// Values are stored row-major (one row per sample) so that a frame is a
/// contiguous slice. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    sensor_ids: Vec<String>,
    start_t: usize,
    sample_interval_min: u32,
    data: Vec<f64>,
}

impl SensorStream {
    /// Build a stream from frames. Frame indices must increase by exactly 1,
    /// all frames must have the same width and all values must be finite.
    pub fn from_frames(sensor_ids: Vec<String>, frames: &[SensorFrame]) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Size("stream needs at least one frame".into()));
        }
        let n = sensor_ids.len();
        Self::check_ids(&sensor_ids)?;
        let start_t = frames[0].t;
        let mut data = Vec::with_capacity(frames.len() * n);
        for (i, frame) in frames.iter().enumerate() {
            if frame.t != start_t + i {
                return Err(Error::Format(format!(
                    "frame indices not contiguous: expected t={}, got t={}",
                    start_t + i,
                    frame.t
                )));
            }
            if frame.values.len() != n {
                return Err(Error::Shape(format!(
                    "frame t={} has {} values, stream has {} sensors",
                    frame.t,
                    frame.values.len(),
                    n
                )));
            }
            for v in &frame.values {
                if !v.is_finite() {
                    return Err(Error::Value(format!("non-finite value at t={}", frame.t)));
                }
            }
            data.extend_from_slice(&frame.values);
        }
        Ok(Self {
            sensor_ids,
            start_t,
            sample_interval_min: SAMPLE_INTERVAL_MIN,
            data,
        })
    }

    /// Build a stream from row-major data, `len * sensor_ids.len()` values.
    pub fn from_rows(sensor_ids: Vec<String>, start_t: usize, data: Vec<f64>) -> Result<Self> {
        let n = sensor_ids.len();
        Self::check_ids(&sensor_ids)?;
        if n == 0 || data.is_empty() || data.len() % n != 0 {
            return Err(Error::Shape(format!(
                "data length {} is not a positive multiple of sensor count {}",
                data.len(),
                n
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Value(format!("non-finite value {v} in stream data")));
        }
        Ok(Self {
            sensor_ids,
            start_t,
            sample_interval_min: SAMPLE_INTERVAL_MIN,
            data,
        })
    }

    fn check_ids(ids: &[String]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::Size("stream needs at least one sensor".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                return Err(Error::Value(format!("duplicate sensor id {id:?}")));
            }
        }
        Ok(())
    }

    pub fn n_sensors(&self) -> usize {
        self.sensor_ids.len()
    }

    pub fn sensor_ids(&self) -> &[String] {
        &self.sensor_ids
    }

    pub fn sensor_index(&self, id: &str) -> Option<usize> {
        self.sensor_ids.iter().position(|s| s == id)
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.data.len() / self.sensor_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Sample index of the first row.
    pub fn start_t(&self) -> usize {
        self.start_t
    }

    pub fn sample_interval_min(&self) -> u32 {
        self.sample_interval_min
    }

    /// Row `i` (0-based position, not sample index) as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.sensor_ids.len();
        &self.data[i * n..(i + 1) * n]
    }

    /// Absolute sample index of row `i`.
    pub fn t_of(&self, i: usize) -> usize {
        self.start_t + i
    }

    pub fn value(&self, i: usize, sensor: usize) -> f64 {
        self.data[i * self.sensor_ids.len() + sensor]
    }

    /// All values of one sensor in row order.
    pub fn column(&self, sensor: usize) -> Vec<f64> {
        let n = self.sensor_ids.len();
        self.data[sensor..].iter().step_by(n).copied().collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.sensor_ids.len())
    }

    /// View over exactly `len` rows starting at position `start`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Window<'_>> {
        if len < 1 {
            return Err(Error::Range("window length must be at least 1".into()));
        }
        if start.checked_add(len).map_or(true, |end| end > self.len()) {
            return Err(Error::Range(format!(
                "window [{start}, {}) exceeds stream length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Window {
            stream: self,
            start,
            len,
        })
    }

    /// Number of complete weeks in the stream.
    pub fn week_count(&self) -> usize {
        self.len() / SAMPLES_PER_WEEK
    }
}

/// A borrowed view over a contiguous run of stream rows.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    stream: &'a SensorStream,
    start: usize,
    len: usize,
}

impl<'a> Window<'a> {
    pub fn stream(&self) -> &'a SensorStream {
        self.stream
    }

    /// Start position within the stream.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> usize {
        self.stream.n_sensors()
    }

    /// Row `i` of the window (0-based within the window).
    pub fn row(&self, i: usize) -> &'a [f64] {
        debug_assert!(i < self.len);
        self.stream.row(self.start + i)
    }

    /// Absolute sample index of window row `i`.
    pub fn t_of(&self, i: usize) -> usize {
        self.stream.t_of(self.start + i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        (0..self.len).map(move |i| self.row(i))
    }

    /// One sensor's values over the window.
    pub fn column(&self, sensor: usize) -> Vec<f64> {
        (0..self.len)
            .map(|i| self.stream.value(self.start + i, sensor))
            .collect()
    }

    /// Copy the window into an owned stream (keeps absolute sample indices).
    pub fn to_stream(&self) -> SensorStream {
        let mut data = Vec::with_capacity(self.len * self.width());
        for row in self.rows() {
            data.extend_from_slice(row);
        }
        SensorStream {
            sensor_ids: self.stream.sensor_ids.clone(),
            start_t: self.stream.t_of(self.start),
            sample_interval_min: self.stream.sample_interval_min,
            data,
        }
    }
}

/// A detection score paired with its ground-truth label (true = leak).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub label: bool,
    pub score: f64,
}

impl LabeledScore {
    pub fn new(label: bool, score: f64) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::Value(format!("non-finite score {score}")));
        }
        Ok(Self { label, score })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream_of(n_sensors: usize, len: usize) -> SensorStream {
        let ids = (0..n_sensors).map(|i| format!("s{i}")).collect();
        let data = (0..len * n_sensors).map(|i| i as f64).collect();
        SensorStream::from_rows(ids, 0, data).unwrap()
    }

    #[test]
    fn slice_whole_stream() {
        let s = stream_of(2, 10);
        let w = s.slice(0, s.len()).unwrap();
        assert_eq!(w.len(), 10);
        assert_eq!(w.row(0), s.row(0));
        assert_eq!(w.row(9), s.row(9));
    }

    #[test]
    fn slice_first_week() {
        let s = stream_of(1, 2 * SAMPLES_PER_WEEK);
        let w = s.slice(0, SAMPLES_PER_WEEK).unwrap();
        assert_eq!(w.len(), 672);
        assert_eq!(w.t_of(0), 0);
    }

    #[test]
    fn slice_past_end_is_range_error() {
        let s = stream_of(1, 10);
        assert!(matches!(s.slice(10, 1), Err(Error::Range(_))));
        assert!(matches!(s.slice(5, 6), Err(Error::Range(_))));
    }

    #[test]
    fn week_count_examples() {
        assert_eq!(stream_of(1, 34944).week_count(), 52);
        assert_eq!(stream_of(1, 671).week_count(), 0);
        assert_eq!(stream_of(1, 1345).week_count(), 2);
    }

    #[test]
    fn frames_must_be_contiguous() {
        let frames = vec![
            SensorFrame::new(0, vec![1.0]).unwrap(),
            SensorFrame::new(2, vec![2.0]).unwrap(),
        ];
        let err = SensorStream::from_frames(vec!["a".into()], &frames);
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SensorFrame::new(0, vec![f64::NAN]).is_err());
        assert!(SensorStream::from_rows(vec!["a".into()], 0, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn window_composition_reproduces_stream() {
        let s = stream_of(3, 50);
        for k in 1..50 {
            let head = s.slice(0, k).unwrap();
            let tail = s.slice(k, 50 - k).unwrap();
            let mut rows: Vec<&[f64]> = head.rows().collect();
            rows.extend(tail.rows());
            let original: Vec<&[f64]> = s.rows().collect();
            assert_eq!(rows, original);
        }
    }

    #[test]
    fn column_matches_rows() {
        let s = stream_of(3, 5);
        let col = s.column(1);
        for i in 0..5 {
            assert_eq!(col[i], s.row(i)[1]);
        }
    }
}
