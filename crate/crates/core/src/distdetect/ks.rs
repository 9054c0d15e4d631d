//! Two-sample Kolmogorov-Smirnov test, applied feature-wise to windows.

use crate::error::{Error, Result};
use crate::stream::Window;

use super::TwoSampleResult;

/// KS statistic: the supremum gap between the two empirical CDFs,
/// computed by a merge over the sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Size("ks_statistic needs two nonempty samples".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let x = match (xs.get(i), ys.get(j)) {
            (Some(&xv), Some(&yv)) => xv.min(yv),
            (Some(&xv), None) => xv,
            (None, Some(&yv)) => yv,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] == x {
            i += 1;
        }
        while j < ys.len() && ys[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic two-sample KS p-value: the Kolmogorov tail
/// `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)` evaluated at
/// `lambda = D sqrt(na nb / (na + nb))`, truncated when terms drop below
/// 1e-12 and clamped to [0, 1].
pub fn ks_p_value(d: f64, n_a: usize, n_b: usize) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&d) || !d.is_finite() {
        return Err(Error::Value(format!("D must be in [0, 1], got {d}")));
    }
    if n_a == 0 || n_b == 0 {
        return Err(Error::Size("sample sizes must be at least 1".into()));
    }
    let ne = (n_a as f64 * n_b as f64) / (n_a as f64 + n_b as f64);
    let lambda = d * ne.sqrt();
    if lambda == 0.0 {
        return Ok(1.0);
    }
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for k in 1..=1000 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    Ok((2.0 * sum).clamp(0.0, 1.0))
}

/// Feature-wise KS over a window pair: per-sensor (D, p) plus a combined
/// statistic `max_j D_j` and a Bonferroni-combined p `min(1, n min_j p_j)`.
pub fn ks_feature_wise(a: &Window, b: &Window) -> Result<TwoSampleResult> {
    if a.width() != b.width() {
        return Err(Error::Shape(format!(
            "window widths differ: {} vs {}",
            a.width(),
            b.width()
        )));
    }
    let n = a.width();
    let mut per_feature = Vec::with_capacity(n);
    let mut max_d = 0.0f64;
    let mut min_p = 1.0f64;
    for j in 0..n {
        let d = ks_statistic(&a.column(j), &b.column(j))?;
        let p = ks_p_value(d, a.len(), b.len())?;
        max_d = max_d.max(d);
        min_p = min_p.min(p);
        per_feature.push((d, p));
    }
    Ok(TwoSampleResult {
        statistic: max_d,
        p_value: Some((n as f64 * min_p).min(1.0)),
        per_feature: Some(per_feature),
    })
}
