//! HSIC independence test between data and time (the DAWIDD detector).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stream::Window;

use super::kernel::{rbf_gram, rbf_gram_scalar, Gram, KernelSpec};
use super::TwoSampleResult;

/// Double-center a Gram matrix: `Kc = H K H` with `H = I - 11'/m`.
fn center(gram: &Gram) -> Vec<f64> {
    let m = gram.n();
    let mut row_mean = vec![0.0; m];
    for i in 0..m {
        row_mean[i] = gram.row(i).iter().sum::<f64>() / m as f64;
    }
    let grand = row_mean.iter().sum::<f64>() / m as f64;
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = gram.at(i, j) - row_mean[i] - row_mean[j] + grand;
        }
    }
    out
}

fn normalize_times(times: &[usize]) -> Vec<f64> {
    let lo = *times.iter().min().unwrap() as f64;
    let hi = *times.iter().max().unwrap() as f64;
    let span = (hi - lo).max(1.0);
    times.iter().map(|&t| (t as f64 - lo) / span).collect()
}

/// Biased HSIC estimator `(1/m^2) trace(K H L H)` with RBF kernels on the
/// data rows and on normalized time.
pub fn hsic_statistic(rows: &[&[f64]], times: &[usize], kernel: &KernelSpec) -> Result<f64> {
    let m = rows.len();
    if m < 4 {
        return Err(Error::Size(format!("hsic needs at least 4 rows, got {m}")));
    }
    if times.len() != m {
        return Err(Error::Shape(format!(
            "{m} rows vs {} time indices",
            times.len()
        )));
    }
    let k = rbf_gram(rows, kernel)?;
    let l = rbf_gram_scalar(&normalize_times(times), kernel)?;
    let kc = center(&k);
    let mut trace = 0.0;
    for i in 0..m {
        let krow = &kc[i * m..(i + 1) * m];
        let lrow = l.row(i);
        for j in 0..m {
            trace += krow[j] * lrow[j];
        }
    }
    Ok(trace / (m as f64 * m as f64))
}

/// HSIC test over a window pair: pooled rows against their sample indices,
/// with a time-permutation p-value. `subsample` caps the pooled row count by
/// even-stride thinning (None = exact).
pub fn hsic_test(
    a: &Window,
    b: &Window,
    kernel: &KernelSpec,
    n_perm: usize,
    seed: u64,
    subsample: Option<usize>,
) -> Result<TwoSampleResult> {
    if a.width() != b.width() {
        return Err(Error::Shape(format!(
            "window widths differ: {} vs {}",
            a.width(),
            b.width()
        )));
    }
    if n_perm == 0 {
        return Err(Error::Value("n_perm must be at least 1".into()));
    }
    let mut rows: Vec<&[f64]> = a.rows().chain(b.rows()).collect();
    let mut times: Vec<usize> = (0..a.len())
        .map(|i| a.t_of(i))
        .chain((0..b.len()).map(|i| b.t_of(i)))
        .collect();
    if let Some(cap) = subsample {
        if cap < 4 {
            return Err(Error::Value("subsample cap must be at least 4".into()));
        }
        if rows.len() > cap {
            let stride = rows.len() as f64 / cap as f64;
            let picks: Vec<usize> = (0..cap).map(|k| (k as f64 * stride) as usize).collect();
            rows = picks.iter().map(|&i| rows[i]).collect();
            times = picks.iter().map(|&i| times[i]).collect();
        }
    }
    let m = rows.len();
    if m < 4 {
        return Err(Error::Size(format!("hsic needs at least 4 rows, got {m}")));
    }

    let k = rbf_gram(&rows, kernel)?;
    let l = rbf_gram_scalar(&normalize_times(&times), kernel)?;
    let kc = center(&k);
    let stat_for = |perm: &[usize]| -> f64 {
        let mut trace = 0.0;
        for i in 0..m {
            let krow = &kc[i * m..(i + 1) * m];
            let lrow = l.row(perm[i]);
            for j in 0..m {
                trace += krow[j] * lrow[perm[j]];
            }
        }
        trace / (m as f64 * m as f64)
    };

    let identity: Vec<usize> = (0..m).collect();
    let observed = stat_for(&identity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm = identity;
    let mut at_least = 0usize;
    for _ in 0..n_perm {
        perm.shuffle(&mut rng);
        if stat_for(&perm) >= observed {
            at_least += 1;
        }
    }
    Ok(TwoSampleResult {
        statistic: observed,
        p_value: Some((1 + at_least) as f64 / (1 + n_perm) as f64),
        per_feature: None,
    })
}
