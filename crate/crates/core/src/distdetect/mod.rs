//! Distribution-based drift detectors: feature-wise KS, the MMD kernel
//! two-sample test, the D3 virtual classifier, the DAWIDD/HSIC independence
//! test, and the ShapeDD magnitude/shape curve.

mod d3;
mod hsic;
mod kernel;
mod ks;
mod mmd;
mod shape;

pub use d3::{d3_score, D3Classifier, D3Config};
pub use hsic::{hsic_statistic, hsic_test};
pub use kernel::{rbf_gram, Bandwidth, Gram, KernelSpec};
pub use ks::{ks_feature_wise, ks_p_value, ks_statistic};
pub use mmd::{mmd2_unbiased, mmd2_unbiased_rows, mmd_test, permutation_test};
pub use shape::{mmd_curve, shape_curve, MagnitudeCurve, ShapeCandidate, ShapeCurve};

use serde::Serialize;

/// Outcome of a two-sample detector: a statistic, a p-value when the
/// detector is a test (absent for score-only detectors like D3), and
/// per-feature (statistic, p) pairs when the detector is feature-wise.
#[derive(Debug, Clone, Serialize)]
pub struct TwoSampleResult {
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_feature: Option<Vec<(f64, f64)>>,
}

impl TwoSampleResult {
    /// Boolean drift flag for score-style detectors: statistic above `tau`.
    pub fn exceeds(&self, tau: f64) -> bool {
        self.statistic > tau
    }
}
