//! Leakage localization: per-sensor KS p-values over a window pair, the
//! smallest-p sensor, and graph-distance quality metrics.

use serde::Serialize;

use crate::distdetect::{ks_p_value, ks_statistic};
use crate::error::{Error, Result};
use crate::graph::WdnGraph;
use crate::stream::Window;

/// Raw per-sensor KS p-values between the reference and test windows.
/// No multiple-testing correction: only the argmin matters downstream.
pub fn pvalue_map(reference: &Window, test: &Window) -> Result<Vec<f64>> {
    if reference.width() != test.width() {
        return Err(Error::Shape(format!(
            "window widths differ: {} vs {}",
            reference.width(),
            test.width()
        )));
    }
    (0..reference.width())
        .map(|j| {
            let d = ks_statistic(&reference.column(j), &test.column(j))?;
            ks_p_value(d, reference.len(), test.len())
        })
        .collect()
}

/// Sensor of minimal p-value; ties break to the smallest sensor index.
pub fn select_sensor(pmap: &[f64]) -> Result<usize> {
    if pmap.is_empty() {
        return Err(Error::Size("p-value map is empty".into()));
    }
    let mut best = 0usize;
    for (j, p) in pmap.iter().enumerate().skip(1) {
        if *p < pmap[best] {
            best = j;
        }
    }
    Ok(best)
}

/// Quality of one localization: distance from the selected sensor to the
/// true leak node, the number of sensors strictly closer, and the distance
/// ratio to the optimal sensor (`None` when the nearest-sensor distance is
/// zero, which flags a degenerate geometry).
#[derive(Debug, Clone, Serialize)]
pub struct LocalizationResult {
    pub selected: String,
    pub leak_node: String,
    pub dist_m: f64,
    pub n_closer: usize,
    pub rel_dist: Option<f64>,
}

/// Compute the three localization metrics for a selected sensor node and
/// the true leak node.
pub fn localization_metrics(
    graph: &WdnGraph,
    selected: &str,
    leak_node: &str,
) -> Result<LocalizationResult> {
    let sel_idx = graph
        .node_index(selected)
        .ok_or_else(|| Error::Reference(format!("unknown node {selected:?}")))?;
    if !graph.sensors().contains(&sel_idx) {
        return Err(Error::Contract(format!(
            "selected node {selected:?} is not a sensor"
        )));
    }
    let table = graph.shortest_paths(leak_node)?;
    let dist = table.distance(sel_idx);
    let n_closer = graph
        .sensors()
        .iter()
        .filter(|&&s| table.distance(s) < dist)
        .count();
    let min_dist = graph
        .sensors()
        .iter()
        .map(|&s| table.distance(s))
        .fold(f64::INFINITY, f64::min);
    let rel_dist = if min_dist > 0.0 {
        Some(dist / min_dist)
    } else {
        None
    };
    Ok(LocalizationResult {
        selected: selected.to_string(),
        leak_node: leak_node.to_string(),
        dist_m: dist,
        n_closer,
        rel_dist,
    })
}
