//! Experiment configuration: JSON schema with strict key checking and
//! validation that reports the offending field path.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use aquadrift_core::distdetect::D3Config;
use aquadrift_core::modelloss::{ModelParams, RegressorKind, TaskKind};
use aquadrift_core::scenario::GeneratorConfig;
use aquadrift_core::stream::SAMPLES_PER_DAY;
use aquadrift_core::{Error, Result};

/// Where the network graph comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "type")]
pub enum GraphSource {
    /// Built-in synthetic lattice with seeded edge lengths.
    Grid {
        rows: usize,
        cols: usize,
        edge_len_m: (f64, f64),
    },
    /// EPANET INP file plus an explicit sensor-node list.
    Inp { path: PathBuf, sensors: Vec<String> },
}

/// Which pipes get leaks: an explicit list or `random:<k>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LeakEdgeSpec {
    Pattern(String),
    List(Vec<String>),
}

/// Distribution-based detectors the sweeps can enable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Ks,
    Mmd,
    D3Linear,
    D3Knn,
    Dawidd,
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::Ks => "ks",
            DetectorKind::Mmd => "mmd",
            DetectorKind::D3Linear => "d3_linear",
            DetectorKind::D3Knn => "d3_knn",
            DetectorKind::Dawidd => "dawidd",
        }
    }
}

/// Parameters of the lag-relevance experiment (elastic net over the full
/// two-week lag range). It runs on its own generator variant: a stronger
/// seasonal trend gives the short lags a role the weekly lags cannot fill,
/// and low noise separates the exact daily/weekly offsets from their
/// 15-minute neighbors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelevanceParams {
    pub daily_amplitude: f64,
    pub weekend_attenuation: f64,
    pub seasonal_amplitude: f64,
    pub noise_std: f64,
    pub alpha: f64,
    pub l1_ratio: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Elastic-net runs averaged into the profile (capped at sensor count).
    pub runs: usize,
}

impl Default for RelevanceParams {
    fn default() -> Self {
        Self {
            daily_amplitude: 0.4,
            weekend_attenuation: 0.9,
            seasonal_amplitude: 0.12,
            noise_std: 0.008,
            alpha: 0.04,
            l1_ratio: 1.0,
            max_iter: 50_000,
            tol: 1e-9,
            runs: 12,
        }
    }
}

/// ShapeDD analysis parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapeParams {
    /// Window lengths in days, one curve per length.
    pub window_days: Vec<usize>,
    /// Step of the split grid in samples.
    pub step: usize,
    /// Half width of the antisymmetric shape kernel, in grid points.
    pub half_width: usize,
    /// Leak size of the analyzed scenario.
    pub scenario_size_mm: f64,
    /// Seasonal amplitude multiplier of the stress variant.
    pub stress_seasonal_factor: f64,
    /// Window length in days for the stress curve.
    pub stress_window_days: usize,
    /// Leak size of the stress scenario (small, so the seasonal trend can win).
    pub stress_size_mm: f64,
    /// Stream length of the stress scenario in days (long enough to reach
    /// the steep part of the seasonal cosine).
    pub stress_days: usize,
}

impl Default for ShapeParams {
    fn default() -> Self {
        Self {
            window_days: vec![1, 7, 14],
            step: 24,
            half_width: 8,
            scenario_size_mm: 19.0,
            stress_seasonal_factor: 2.0,
            stress_window_days: 14,
            stress_size_mm: 5.0,
            stress_days: 120,
        }
    }
}

/// Full experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub generator: GeneratorConfig,
    pub sizes_mm: Vec<f64>,
    pub leak_edges: LeakEdgeSpec,
    /// Scenarios per size for the model-loss and distribution sweeps.
    pub scenarios_per_size: usize,
    /// Scenarios per size for the localization table.
    pub loc_scenarios_per_size: usize,
    pub displacements_days: Vec<usize>,
    pub detectors: Vec<DetectorKind>,
    pub models: Vec<RegressorKind>,
    pub tasks: Vec<TaskKind>,
    /// Non-overlapping two-week folds for the model-loss evaluation.
    pub folds: usize,
    pub n_perm: usize,
    /// Independent repetitions of the distribution sweep.
    pub replicates: usize,
    /// Leak onset day; `None` puts it mid-stream.
    pub onset_day: Option<usize>,
    /// Detector window length in samples (default one week).
    pub window_len: usize,
    pub model_params: ModelParams,
    pub d3: D3Config,
    /// Row cap for the DAWIDD/HSIC permutation test (`None` = exact).
    pub dawidd_subsample: Option<usize>,
    /// Forecast-task lags for the fold sweeps.
    pub forecast_lags: Vec<usize>,
    pub relevance: RelevanceParams,
    pub shape: ShapeParams,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: GraphSource::Grid {
                rows: 10,
                cols: 10,
                edge_len_m: (80.0, 120.0),
            },
            // The generator's own defaults are 29 sensors over 364 days;
            // the sweep default is sized to finish in minutes.
            generator: GeneratorConfig {
                n_sensors: 12,
                days: 56,
                ..GeneratorConfig::default()
            },
            sizes_mm: vec![7.0, 11.0, 15.0, 19.0],
            leak_edges: LeakEdgeSpec::Pattern("random:20".into()),
            scenarios_per_size: 12,
            loc_scenarios_per_size: 25,
            displacements_days: vec![0, 1, 2, 3, 4, 5, 6],
            detectors: vec![
                DetectorKind::Ks,
                DetectorKind::Mmd,
                DetectorKind::D3Linear,
                DetectorKind::D3Knn,
                DetectorKind::Dawidd,
            ],
            models: vec![
                RegressorKind::Ridge,
                RegressorKind::PolyRidge,
                RegressorKind::Knn,
            ],
            tasks: vec![TaskKind::Forecast, TaskKind::Interpolate],
            folds: 3,
            n_perm: 200,
            replicates: 1,
            onset_day: None,
            window_len: 672,
            model_params: ModelParams::default(),
            d3: D3Config::default(),
            dawidd_subsample: Some(512),
            forecast_lags: vec![1, 96, 672],
            relevance: RelevanceParams::default(),
            shape: ShapeParams::default(),
            master_seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stream_len(&self) -> usize {
        self.generator.days * SAMPLES_PER_DAY
    }

    /// Leak onset in samples.
    pub fn onset(&self) -> usize {
        let day = self
            .onset_day
            .unwrap_or_else(|| self.generator.days / 2);
        day * SAMPLES_PER_DAY
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Error::Value(format!("config {name}: {msg}"));
        self.generator
            .validate()
            .map_err(|e| field("generator", e.to_string()))?;
        match &self.graph {
            GraphSource::Grid { rows, cols, edge_len_m } => {
                if *rows < 2 || *cols < 2 {
                    return Err(field("graph", "grid needs at least 2x2 nodes".into()));
                }
                if !(edge_len_m.0 > 0.0 && edge_len_m.1 >= edge_len_m.0) {
                    return Err(field("graph.edge_len_m", "need 0 < lo <= hi".into()));
                }
                if self.generator.n_sensors > rows * cols {
                    return Err(field(
                        "generator.n_sensors",
                        format!("{} sensors exceed {} grid nodes", self.generator.n_sensors, rows * cols),
                    ));
                }
            }
            GraphSource::Inp { sensors, .. } => {
                if sensors.is_empty() {
                    return Err(field("graph.sensors", "INP graphs need explicit sensors".into()));
                }
            }
        }
        if self.sizes_mm.is_empty() {
            return Err(field("sizes_mm", "need at least one size".into()));
        }
        for s in &self.sizes_mm {
            if !(*s >= 0.0) || !s.is_finite() {
                return Err(field("sizes_mm", format!("bad size {s}")));
            }
        }
        if self.scenarios_per_size == 0 || self.loc_scenarios_per_size == 0 {
            return Err(field("scenarios_per_size", "need at least one scenario".into()));
        }
        if let LeakEdgeSpec::Pattern(p) = &self.leak_edges {
            parse_random_pattern(p)?;
        }
        if self.displacements_days.is_empty() {
            return Err(field("displacements_days", "need at least one displacement".into()));
        }
        if self.detectors.is_empty() {
            return Err(field("detectors", "need at least one detector".into()));
        }
        if self.models.is_empty() || self.tasks.is_empty() {
            return Err(field("models", "need at least one model and task".into()));
        }
        if self.folds == 0 {
            return Err(field("folds", "need at least one fold".into()));
        }
        if self.n_perm == 0 {
            return Err(field("n_perm", "need at least one permutation".into()));
        }
        if self.replicates == 0 {
            return Err(field("replicates", "need at least one replicate".into()));
        }
        if self.window_len < 2 {
            return Err(field("window_len", "window must be at least 2 samples".into()));
        }
        let len = self.stream_len();
        let onset = self.onset();
        if onset < self.window_len {
            return Err(field(
                "onset_day",
                format!("onset {onset} leaves no room for the reference window ({})", self.window_len),
            ));
        }
        let max_delta = *self.displacements_days.iter().max().unwrap() * SAMPLES_PER_DAY;
        if onset + max_delta + self.window_len > len {
            return Err(field(
                "displacements_days",
                format!(
                    "onset {onset} + max displacement {max_delta} + window {} exceeds stream length {len}",
                    self.window_len
                ),
            ));
        }
        if self.forecast_lags.is_empty() {
            return Err(field("forecast_lags", "need at least one lag".into()));
        }
        if self.shape.window_days.is_empty() || self.shape.step == 0 || self.shape.half_width == 0 {
            return Err(field("shape", "bad shape parameters".into()));
        }
        for d in &self.shape.window_days {
            if d * SAMPLES_PER_DAY * 2 > len {
                return Err(field(
                    "shape.window_days",
                    format!("{d}-day windows do not fit twice into {} days", self.generator.days),
                ));
            }
        }
        if self.shape.stress_window_days * SAMPLES_PER_DAY * 2 > self.shape.stress_days * SAMPLES_PER_DAY
            || self.onset() + SAMPLES_PER_DAY >= self.shape.stress_days * SAMPLES_PER_DAY
        {
            return Err(field(
                "shape.stress_days",
                format!(
                    "stress stream of {} days too short for {}-day windows around onset day {}",
                    self.shape.stress_days,
                    self.shape.stress_window_days,
                    self.onset() / SAMPLES_PER_DAY
                ),
            ));
        }
        Ok(())
    }
}

/// Parse `random:<k>` into k.
pub fn parse_random_pattern(p: &str) -> Result<usize> {
    let rest = p
        .strip_prefix("random:")
        .ok_or_else(|| Error::Value(format!("config leak_edges: expected `random:<k>` or a list, got {p:?}")))?;
    let k: usize = rest
        .parse()
        .map_err(|_| Error::Value(format!("config leak_edges: bad count in {p:?}")))?;
    if k == 0 {
        return Err(Error::Value("config leak_edges: need at least one edge".into()));
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_json(r#"{"bogus_key": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn validation_reports_field_path() {
        let mut cfg = ExperimentConfig::default();
        cfg.generator.noise_std = 0.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("generator"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.displacements_days = vec![400];
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("displacements_days"), "{err}");
    }

    #[test]
    fn random_pattern_parses() {
        assert_eq!(parse_random_pattern("random:20").unwrap(), 20);
        assert!(parse_random_pattern("randomly:2").is_err());
        assert!(parse_random_pattern("random:x").is_err());
    }
}
