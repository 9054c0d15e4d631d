//! Elastic-net regression by coordinate descent.

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

use super::linear::{dot, Scaler};

/// Sparse linear model minimizing
/// `(1/2m)||Xw - y||^2 + alpha*l1_ratio*||w||_1 + (alpha/2)(1-l1_ratio)||w||^2`
/// over standardized features, with an unpenalized intercept.
#[derive(Debug, Clone)]
pub struct ElasticNetModel {
    weights: Vec<f64>,
    intercept: f64,
    converged: bool,
    sweeps: usize,
    objectives: Vec<f64>,
}

impl ElasticNetModel {
    /// Weights in original feature units.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    /// False when max_iter ran out before the coordinate updates fell below
    /// tol; the fit is still usable.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Objective value after each full coordinate sweep (standardized scale).
    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, row)
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub fn fit_elastic_net(
    x: &DesignMatrix,
    y: &[f64],
    alpha: f64,
    l1_ratio: f64,
    max_iter: usize,
    tol: f64,
) -> Result<ElasticNetModel> {
    if x.n_rows() != y.len() || x.n_rows() == 0 {
        return Err(Error::Shape(format!(
            "{} rows vs {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Value(format!("alpha must be >= 0, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&l1_ratio) {
        return Err(Error::Value(format!(
            "l1_ratio must be in [0, 1], got {l1_ratio}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::Value("max_iter must be positive".into()));
    }

    let m = x.n_rows();
    let p = x.n_cols();
    let scaler = Scaler::fit(x);
    let y_mean = y.iter().sum::<f64>() / m as f64;

    // Column-major standardized copy for cheap coordinate access.
    let mut cols = vec![0.0f64; m * p];
    for (i, row) in x.rows_iter().enumerate() {
        for j in 0..p {
            cols[j * m + i] = (row[j] - scaler.mean[j]) / scaler.scale[j];
        }
    }
    // z_j . z_j / m; 1 for standardized columns, 0 for constant ones.
    let col_norm: Vec<f64> = (0..p)
        .map(|j| cols[j * m..(j + 1) * m].iter().map(|v| v * v).sum::<f64>() / m as f64)
        .collect();

    let l1 = alpha * l1_ratio;
    let l2 = alpha * (1.0 - l1_ratio);
    let mut w = vec![0.0f64; p];
    let mut residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let update_coord = |j: usize, w: &mut [f64], residual: &mut [f64]| -> f64 {
        if col_norm[j] == 0.0 {
            return 0.0;
        }
        let col = &cols[j * m..(j + 1) * m];
        let old = w[j];
        let rho = dot(col, residual) / m as f64 + col_norm[j] * old;
        let new = soft_threshold(rho, l1) / (col_norm[j] + l2);
        if new != old {
            let delta = new - old;
            for (r, c) in residual.iter_mut().zip(col) {
                *r -= delta * c;
            }
            w[j] = new;
        }
        (new - old).abs()
    };

    // Full sweeps decide convergence; between them, cheap sweeps over the
    // active (nonzero) coordinates do most of the work.
    let mut converged = false;
    let mut sweeps = 0;
    let mut objectives = Vec::new();
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_update = 0.0f64;
        for j in 0..p {
            max_update = max_update.max(update_coord(j, &mut w, &mut residual));
        }
        let sq: f64 = residual.iter().map(|r| r * r).sum();
        let l1_term: f64 = w.iter().map(|v| v.abs()).sum();
        let l2_term: f64 = w.iter().map(|v| v * v).sum();
        objectives.push(sq / (2.0 * m as f64) + l1 * l1_term + 0.5 * l2 * l2_term);
        if max_update < tol {
            converged = true;
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| w[j] != 0.0).collect();
        while sweeps < max_iter {
            sweeps += 1;
            let mut inner_max = 0.0f64;
            for &j in &active {
                inner_max = inner_max.max(update_coord(j, &mut w, &mut residual));
            }
            if inner_max < tol {
                break;
            }
        }
    }

    let mut weights = vec![0.0; p];
    let mut intercept = y_mean;
    for j in 0..p {
        weights[j] = w[j] / scaler.scale[j];
        intercept -= weights[j] * scaler.mean[j];
    }
    Ok(ElasticNetModel {
        weights,
        intercept,
        converged,
        sweeps,
        objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelloss::linear::fit_ridge;

    #[test]
    fn alpha_zero_equals_least_squares() {
        let x = DesignMatrix::from_rows(&[
            vec![1.0, 0.2],
            vec![2.0, -0.5],
            vec![3.0, 1.0],
            vec![4.0, 0.3],
            vec![5.0, -1.2],
        ])
        .unwrap();
        let y: Vec<f64> = x.rows_iter().map(|r| 1.5 * r[0] - 0.7 * r[1] + 2.0).collect();
        let net = fit_elastic_net(&x, &y, 0.0, 0.5, 10_000, 1e-12).unwrap();
        let ols = fit_ridge(&x, &y, 0.0).unwrap();
        for (a, b) in net.weights().iter().zip(ols.weights()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!((net.intercept() - ols.intercept()).abs() < 1e-6);
    }

    #[test]
    fn huge_alpha_zeroes_all_weights() {
        let x = DesignMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let net = fit_elastic_net(&x, &y, 1e6, 0.9, 100, 1e-10).unwrap();
        assert!(net.weights().iter().all(|w| *w == 0.0));
        assert!((net.predict(&[7.0]) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_feature_matches_soft_threshold_formula() {
        let xs = [0.3, -1.2, 2.0, 0.9, -0.4, 1.1];
        let ys = [0.5, -1.0, 2.2, 1.1, -0.2, 0.9];
        let x = DesignMatrix::from_rows(&xs.iter().map(|v| vec![*v]).collect::<Vec<_>>()).unwrap();
        let (alpha, l1_ratio) = (0.2, 0.7);
        let net = fit_elastic_net(&x, &ys, alpha, l1_ratio, 1000, 1e-14).unwrap();

        // closed-form single-coordinate solution on standardized data
        let m = xs.len() as f64;
        let mean_x = xs.iter().sum::<f64>() / m;
        let std_x = (xs.iter().map(|v| (v - mean_x).powi(2)).sum::<f64>() / m).sqrt();
        let mean_y = ys.iter().sum::<f64>() / m;
        let rho = xs
            .iter()
            .zip(&ys)
            .map(|(xv, yv)| (xv - mean_x) / std_x * (yv - mean_y))
            .sum::<f64>()
            / m;
        let t = alpha * l1_ratio;
        let denom = 1.0 + alpha * (1.0 - l1_ratio);
        let w_std = if rho > t {
            (rho - t) / denom
        } else if rho < -t {
            (rho + t) / denom
        } else {
            0.0
        };
        assert!((net.weights()[0] - w_std / std_x).abs() < 1e-10);
    }

    #[test]
    fn objective_non_increasing_across_sweeps() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] - 2.0 * r[3] + 0.2 * rng.gen_range(-1.0..1.0_f64))
            .collect();
        let x = DesignMatrix::from_rows(&rows).unwrap();
        let net = fit_elastic_net(&x, &y, 0.05, 0.5, 50, 0.0).unwrap();
        for pair in net.objectives().windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "objective increased: {pair:?}");
        }
    }

    #[test]
    fn non_convergence_is_flagged_not_fatal() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 0.9], vec![2.0, 2.1], vec![3.0, 2.8]]).unwrap();
        let y = vec![1.0, 2.0, 3.0];
        let net = fit_elastic_net(&x, &y, 1e-6, 0.5, 1, 1e-15).unwrap();
        assert!(!net.converged());
        assert_eq!(net.sweeps(), 1);
    }
}
