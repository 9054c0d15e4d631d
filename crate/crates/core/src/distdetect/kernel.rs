//! RBF kernel matrices with median-heuristic bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bandwidth choice for the RBF kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// Median pairwise distance over the pooled sample (lower median;
    /// falls back to 1.0 when the median is zero).
    MedianHeuristic,
    Fixed(f64),
}

/// Kernel descriptor; only the RBF kernel is supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

impl KernelSpec {
    pub fn fixed(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::Value(format!(
                "bandwidth must be > 0, got {bandwidth}"
            )));
        }
        Ok(Self {
            bandwidth: Bandwidth::Fixed(bandwidth),
        })
    }
}

/// Dense symmetric kernel matrix over one pooled sample.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
    bandwidth: f64,
}

impl Gram {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Resolve the bandwidth against pairwise squared distances (upper triangle
/// of the pooled sample).
fn resolve_bandwidth(spec: &KernelSpec, sq_dists: &mut [f64]) -> f64 {
    match spec.bandwidth {
        Bandwidth::Fixed(b) => b,
        Bandwidth::MedianHeuristic => {
            if sq_dists.is_empty() {
                return 1.0;
            }
            let mid = (sq_dists.len() - 1) / 2;
            let (_, med, _) = sq_dists.select_nth_unstable_by(mid, f64::total_cmp);
            let median = med.sqrt();
            if median > 0.0 {
                median
            } else {
                1.0
            }
        }
    }
}

/// Build the RBF Gram matrix `k(x, y) = exp(-||x - y||^2 / (2 sigma^2))`
/// over the pooled rows, resolving the bandwidth on the same pool.
pub fn rbf_gram(rows: &[&[f64]], spec: &KernelSpec) -> Result<Gram> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Size("kernel matrix needs at least one row".into()));
    }
    let width = rows[0].len();
    for r in rows {
        if r.len() != width {
            return Err(Error::Shape("kernel rows have mixed widths".into()));
        }
    }
    // squared distances, upper triangle
    let mut sq = vec![0.0f64; n * (n - 1) / 2];
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            sq[idx] = squared_distance(rows[i], rows[j]);
            idx += 1;
        }
    }
    let mut pool = sq.clone();
    let bandwidth = resolve_bandwidth(spec, &mut pool);
    let inv = -1.0 / (2.0 * bandwidth * bandwidth);

    let mut values = vec![1.0f64; n * n];
    let mut idx = 0;
    for i in 0..n {
        for j in i + 1..n {
            let k = (sq[idx] * inv).exp();
            values[i * n + j] = k;
            values[j * n + i] = k;
            idx += 1;
        }
    }
    Ok(Gram {
        n,
        values,
        bandwidth,
    })
}

/// RBF Gram over scalar values (used for the time kernel).
pub fn rbf_gram_scalar(values: &[f64], spec: &KernelSpec) -> Result<Gram> {
    let rows: Vec<&[f64]> = values.chunks(1).collect();
    rbf_gram(&rows, spec)
}
