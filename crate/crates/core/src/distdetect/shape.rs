//! Shape drift detector: the sliding MMD magnitude curve and its
//! sign-change post-processing that pinpoints candidate drift points.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stream::SensorStream;

use super::kernel::KernelSpec;
use super::mmd::mmd2_unbiased;

/// Windowed MMD^2 magnitudes on a step grid of split positions.
#[derive(Debug, Clone)]
pub struct MagnitudeCurve {
    /// Stream position of each split point.
    pub positions: Vec<usize>,
    /// MMD^2 of the windows left/right of the split, clipped at 0.
    pub values: Vec<f64>,
}

/// Drift magnitude curve: MMD^2 of the two `window_len` windows adjacent to
/// each split position on the step grid.
pub fn mmd_curve(
    stream: &SensorStream,
    window_len: usize,
    step: usize,
    kernel: &KernelSpec,
) -> Result<MagnitudeCurve> {
    if window_len < 2 {
        return Err(Error::Value("window_len must be at least 2".into()));
    }
    if step == 0 {
        return Err(Error::Value("step must be positive".into()));
    }
    if stream.len() < 2 * window_len {
        return Err(Error::Size(format!(
            "stream of {} samples is shorter than two windows of {window_len}",
            stream.len()
        )));
    }
    let mut positions = Vec::new();
    let mut values = Vec::new();
    let mut split = window_len;
    while split + window_len <= stream.len() {
        let left = stream.slice(split - window_len, window_len)?;
        let right = stream.slice(split, window_len)?;
        positions.push(split);
        values.push(mmd2_unbiased(&left, &right, kernel)?.max(0.0));
        split += step;
    }
    Ok(MagnitudeCurve { positions, values })
}

/// A positive-to-negative zero crossing of the shape curve, annotated with
/// the magnitude at the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeCandidate {
    /// Stream position of the candidate drift point.
    pub position: usize,
    /// Magnitude curve value at the crossing.
    pub magnitude: f64,
}

/// Magnitude curve convolved with the antisymmetric step kernel, plus the
/// extracted candidate drift points.
#[derive(Debug, Clone)]
pub struct ShapeCurve {
    pub positions: Vec<usize>,
    pub magnitude: Vec<f64>,
    pub shape: Vec<f64>,
    pub candidates: Vec<ShapeCandidate>,
}

impl ShapeCurve {
    /// Candidate with the largest magnitude (ties: earliest position).
    pub fn top_candidate(&self) -> Option<ShapeCandidate> {
        self.candidates
            .iter()
            .copied()
            .max_by(|a, b| {
                a.magnitude
                    .partial_cmp(&b.magnitude)
                    .unwrap()
                    .then(b.position.cmp(&a.position))
            })
    }
}

/// Convolve the magnitude series with the antisymmetric kernel
/// `h(i) = +1 for i in [-half_width, 0), -1 for i in (0, half_width]`
/// (zero at 0), so `s(t)` sums the magnitudes after `t` minus those before,
/// and extract candidates where the result crosses from positive to
/// non-positive. Boundaries replicate the edge values, which keeps a
/// constant magnitude series at exactly zero shape.
pub fn shape_curve(m: &MagnitudeCurve, half_width: usize) -> Result<ShapeCurve> {
    if half_width < 1 {
        return Err(Error::Value("half_width must be at least 1".into()));
    }
    let len = m.values.len();
    if len <= 2 * half_width {
        return Err(Error::Size(format!(
            "magnitude series of {len} points is too short for half_width {half_width}"
        )));
    }
    let mut shape = vec![0.0f64; len];
    for i in 0..len {
        let mut s = 0.0;
        for k in 1..=half_width {
            let before = m.values[i.saturating_sub(k)];
            let after = m.values[(i + k).min(len - 1)];
            s += after - before;
        }
        shape[i] = s;
    }
    let mut candidates = Vec::new();
    for i in 1..len {
        if shape[i - 1] > 0.0 && shape[i] <= 0.0 {
            candidates.push(ShapeCandidate {
                position: m.positions[i],
                magnitude: m.values[i],
            });
        }
    }
    Ok(ShapeCurve {
        positions: m.positions.clone(),
        magnitude: m.values.clone(),
        shape,
        candidates,
    })
}
