//! Output emission: per-record JSON, plot-ready sweep CSVs, scenario files
//! and the run manifest. Floats are printed at full round-trip precision so
//! identical runs produce bytewise-identical files.
//!
//! Before writing, every sweep is recomputed from the serialized records and
//! compared against the in-memory aggregate; a mismatch aborts the run.

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use aquadrift_core::scenario::{
    generate_scenario, generate_stream, write_csv_path, LeakSpec, ScenarioMeta,
};
use aquadrift_core::{Error, Result};

use crate::config::ExperimentConfig;
use crate::plan::{build_graph, leak_edges, scenario_seed};
use crate::runner::{
    aggregate_dist, aggregate_loc, aggregate_modelloss, DistOutput, LocOutput, ModellossOutput,
    ShapeOutput,
};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("serializing {path:?}: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn consistency_error(what: &str) -> Error {
    Error::Numerical(format!(
        "self-consistency check failed: {what} aggregates are not recomputable from the emitted records"
    ))
}

pub fn write_modelloss(out_dir: &Path, output: &ModellossOutput) -> Result<()> {
    let records_path = out_dir.join("records_modelloss.json");
    write_json(&records_path, &output.records)?;
    let parsed: Vec<crate::runner::ModellossRecord> =
        serde_json::from_str(&fs::read_to_string(&records_path)?)
            .map_err(|e| Error::Format(format!("re-reading records: {e}")))?;
    if aggregate_modelloss(&parsed) != output.sweep {
        return Err(consistency_error("modelloss"));
    }

    let mut csv = String::from(
        "model,task,size_mm,auc_mean,auc_std,auc_median,mse_mean,mse_baseline_mean,n\n",
    );
    for r in &output.sweep {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.model,
            r.task,
            r.size_mm,
            r.auc_mean,
            r.auc_std,
            r.auc_median,
            r.mse_mean,
            r.mse_baseline_mean,
            r.n
        )
        .unwrap();
    }
    fs::write(out_dir.join("sweep_modelloss.csv"), csv)?;

    let mut rel = String::from("lag,mean_abs_weight,std_abs_weight\n");
    for ((lag, mean), std) in output
        .relevance
        .lags
        .iter()
        .zip(&output.relevance.mean_abs)
        .zip(&output.relevance.std_abs)
    {
        writeln!(rel, "{lag},{mean},{std}").unwrap();
    }
    fs::write(out_dir.join("relevance_profile.csv"), rel)?;
    Ok(())
}

pub fn write_dist(out_dir: &Path, output: &DistOutput) -> Result<()> {
    let records_path = out_dir.join("records_dist.json");
    write_json(&records_path, &output.records)?;
    let parsed: Vec<crate::runner::DistRecord> =
        serde_json::from_str(&fs::read_to_string(&records_path)?)
            .map_err(|e| Error::Format(format!("re-reading records: {e}")))?;
    if aggregate_dist(&parsed)? != output.sweep {
        return Err(consistency_error("dist"));
    }

    let mut csv =
        String::from("detector,size_mm,displacement_days,auc_mean,auc_std,auc_median,n_replicates\n");
    for r in &output.sweep {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.detector,
            r.size_mm,
            r.displacement_days,
            r.auc_mean,
            r.auc_std,
            r.auc_median,
            r.n_replicates
        )
        .unwrap();
    }
    fs::write(out_dir.join("sweep_dist.csv"), csv)?;
    Ok(())
}

pub fn write_localize(out_dir: &Path, output: &LocOutput) -> Result<()> {
    let records_path = out_dir.join("records_localize.json");
    write_json(&records_path, &output.records)?;
    let parsed: Vec<crate::runner::LocRecord> =
        serde_json::from_str(&fs::read_to_string(&records_path)?)
            .map_err(|e| Error::Format(format!("re-reading records: {e}")))?;
    if aggregate_loc(&parsed) != output.sweep {
        return Err(consistency_error("localize"));
    }

    let mut csv = String::from(
        "size_mm,dist_mean,dist_std,rel_d_mean,rel_d_std,n_closer_mean,n_closer_std,n\n",
    );
    for r in &output.sweep {
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.size_mm,
            r.dist_mean,
            r.dist_std,
            r.rel_d_mean,
            r.rel_d_std,
            r.n_closer_mean,
            r.n_closer_std,
            r.n
        )
        .unwrap();
    }
    fs::write(out_dir.join("sweep_localize.csv"), csv)?;
    Ok(())
}

#[derive(Serialize)]
struct ShapeRecord<'a> {
    label: &'a str,
    window_days: usize,
    stress: bool,
    onset: usize,
    candidates: &'a [aquadrift_core::distdetect::ShapeCandidate],
}

pub fn write_shape(out_dir: &Path, output: &ShapeOutput) -> Result<()> {
    for curve in &output.curves {
        let mut csv = String::from("position,magnitude,shape,candidate\n");
        for (i, pos) in curve.positions.iter().enumerate() {
            let is_candidate = curve.candidates.iter().any(|c| c.position == *pos) as u8;
            writeln!(
                csv,
                "{},{},{},{}",
                pos, curve.magnitude[i], curve.shape[i], is_candidate
            )
            .unwrap();
        }
        fs::write(out_dir.join(format!("shape_curve_{}.csv", curve.label)), csv)?;
    }
    let records: Vec<ShapeRecord> = output
        .curves
        .iter()
        .map(|c| ShapeRecord {
            label: &c.label,
            window_days: c.window_days,
            stress: c.stress,
            onset: c.onset,
            candidates: &c.candidates,
        })
        .collect();
    write_json(&out_dir.join("records_shape.json"), &records)?;
    Ok(())
}

/// Write the scenario corpus: per scenario a paired baseline CSV, one leak
/// CSV per size and a metadata JSON next to each leak file.
pub fn write_scenarios(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let dir = out_dir.join("scenarios");
    fs::create_dir_all(&dir)?;
    let graph = build_graph(cfg)?;
    let onset = cfg.onset();
    for replicate in 0..cfg.replicates {
        let edges = leak_edges(cfg, &graph, replicate)?;
        for j in 0..cfg.scenarios_per_size {
            let seed = scenario_seed(cfg.master_seed, "dist", replicate, j);
            let edge = &edges[j % edges.len()];
            let baseline = generate_stream(&graph, &cfg.generator, None, seed)?;
            let baseline_name = format!("baseline_r{replicate}_j{j}.csv");
            write_csv_path(&baseline, dir.join(&baseline_name))?;
            for &size in &cfg.sizes_mm {
                let leak = LeakSpec {
                    edge_id: edge.clone(),
                    diameter_mm: size,
                    onset,
                };
                let scenario = generate_scenario(&graph, &cfg.generator, &leak, seed)?;
                let stem = format!("leak_r{replicate}_j{j}_{size}mm");
                write_csv_path(&scenario.stream, dir.join(format!("{stem}.csv")))?;
                let meta = ScenarioMeta {
                    leak_node: scenario.leak_node.clone(),
                    diameter_mm: size,
                    onset,
                    seed,
                    baseline_path: baseline_name.clone(),
                };
                write_json(&dir.join(format!("{stem}.json")), &meta)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_hash: String,
    master_seed: u64,
    tool_version: &'a str,
    wall_time_s: f64,
}

/// Hash of the canonical (serialized) configuration. The output directory
/// identifies the run's destination, not the experiment, so it is
/// normalized out before hashing.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut canonical_cfg = cfg.clone();
    canonical_cfg.output_dir = std::path::PathBuf::new();
    let canonical = serde_json::to_string(&canonical_cfg)
        .map_err(|e| Error::Format(format!("config hash: {e}")))?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Run manifest. The wall time is inherently run-specific, so determinism
/// checks compare every output except this file's wall_time_s field.
pub fn write_manifest(out_dir: &Path, cfg: &ExperimentConfig, wall_time_s: f64) -> Result<()> {
    let manifest = Manifest {
        config_hash: config_hash(cfg)?,
        master_seed: cfg.master_seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)
}
