//! Ridge regression (closed form) and its polynomial-expansion variant.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;

/// Feature cap for the polynomial expansion.
pub const MAX_POLY_FEATURES: usize = 5000;

/// Per-feature training mean and standard deviation. Zero-variance features
/// get a unit scale so they standardize to zero.
#[derive(Debug, Clone)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &DesignMatrix) -> Self {
        let mean = x.col_means();
        let mut scale = x.col_stds(&mean);
        for s in &mut scale {
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Self { mean, scale }
    }

    pub fn transform_into(&self, row: &[f64], out: &mut [f64]) {
        for ((o, v), (m, s)) in out
            .iter_mut()
            .zip(row)
            .zip(self.mean.iter().zip(&self.scale))
        {
            *o = (v - m) / s;
        }
    }
}

/// Linear ridge model with weights in original feature units and an
/// unpenalized intercept.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    weights: Vec<f64>,
    intercept: f64,
}

impl RidgeModel {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, row)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fit ridge regression: minimize `||Xw - y||^2 + lambda ||w||^2` with an
/// unpenalized intercept. Features are standardized internally by training
/// mean/std; returned weights are mapped back to original units.
pub fn fit_ridge(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<RidgeModel> {
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows vs {} targets",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::Size("ridge fit needs at least one row".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Value(format!("lambda must be >= 0, got {lambda}")));
    }
    let scaler = Scaler::fit(x);
    let m = x.n_rows();
    let p = x.n_cols();
    let y_mean = y.iter().sum::<f64>() / m as f64;

    // Normal equations on standardized features: (Z'Z + lambda I) w = Z' yc.
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut atb = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; p];
    for (row, &yi) in x.rows_iter().zip(y) {
        scaler.transform_into(row, &mut z);
        let yc = yi - y_mean;
        for i in 0..p {
            atb[i] += z[i] * yc;
            for j in i..p {
                ata[(i, j)] += z[i] * z[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            ata[(i, j)] = ata[(j, i)];
        }
        ata[(i, i)] += lambda;
    }

    let w_std = match Cholesky::new(ata.clone()) {
        Some(chol) => chol.solve(&atb),
        None => ata
            .lu()
            .solve(&atb)
            .ok_or_else(|| Error::Numerical("singular ridge system (rank-deficient at lambda = 0)".into()))?,
    };

    let mut weights = vec![0.0; p];
    let mut intercept = y_mean;
    for j in 0..p {
        weights[j] = w_std[j] / scaler.scale[j];
        intercept -= weights[j] * scaler.mean[j];
    }
    Ok(RidgeModel { weights, intercept })
}

/// Number of monomials of total degree 1..=degree over `p` features.
fn poly_feature_count(p: usize, degree: usize) -> usize {
    // C(p + degree, degree) - 1, computed incrementally to avoid overflow
    let mut total = 0usize;
    let mut level = 1usize; // C(p - 1 + d, d) terms of exact degree d
    for d in 1..=degree {
        level = level * (p + d - 1) / d;
        total = total.saturating_add(level);
        if total > MAX_POLY_FEATURES {
            return total;
        }
    }
    total
}

/// Expand a row into all monomials of total degree 1..=degree, in a fixed
/// order: degree ascending, then lexicographic index combinations.
pub fn expand_poly_row(row: &[f64], degree: usize, out: &mut Vec<f64>) {
    out.clear();
    for d in 1..=degree {
        emit_degree(row, 0, d, 1.0, out);
    }
}

fn emit_degree(row: &[f64], start: usize, left: usize, product: f64, out: &mut Vec<f64>) {
    for i in start..row.len() {
        let prod = product * row[i];
        if left == 1 {
            out.push(prod);
        } else {
            emit_degree(row, i, left - 1, prod, out);
        }
    }
}

/// Ridge model on the polynomial feature expansion of the inputs.
#[derive(Debug, Clone)]
pub struct PolyRidgeModel {
    degree: usize,
    ridge: RidgeModel,
}

impl PolyRidgeModel {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ridge(&self) -> &RidgeModel {
        &self.ridge
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut expanded = Vec::new();
        expand_poly_row(row, self.degree, &mut expanded);
        self.ridge.predict(&expanded)
    }
}

/// Ridge fit on the polynomial expansion (all monomials of total degree
/// <= `degree`, intercept separate).
pub fn fit_poly_ridge(
    x: &DesignMatrix,
    y: &[f64],
    degree: usize,
    lambda: f64,
) -> Result<PolyRidgeModel> {
    if degree < 1 {
        return Err(Error::Value(format!("degree must be >= 1, got {degree}")));
    }
    let count = poly_feature_count(x.n_cols(), degree);
    if count > MAX_POLY_FEATURES {
        return Err(Error::Capacity(format!(
            "polynomial expansion of {} features at degree {degree} yields {count} features (cap {MAX_POLY_FEATURES})",
            x.n_cols()
        )));
    }
    let mut expanded = DesignMatrix::zeros(x.n_rows(), count);
    let mut buf = Vec::with_capacity(count);
    for i in 0..x.n_rows() {
        expand_poly_row(x.row(i), degree, &mut buf);
        expanded.row_mut(i).copy_from_slice(&buf);
    }
    let ridge = fit_ridge(&expanded, y, lambda)?;
    Ok(PolyRidgeModel { degree, ridge })
}
