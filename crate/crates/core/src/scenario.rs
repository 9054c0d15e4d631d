//! Surrogate pressure-scenario generation and stream persistence.
//!
//! The generator replaces a hydraulic simulation with a signal model that
//! keeps the properties the detectors rely on: daily and weekly periodicity
//! with a weekend shape change, a slow seasonal cosine trend, i.i.d. Gaussian
//! sensor noise, and a leak response that decays exponentially with graph
//! distance from the leak and ramps in over one day. Identical seeds give
//! identical streams, and the pre-onset part of a leak scenario is exactly
//! equal to the leak-free stream from the same seed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WdnGraph;
use crate::stream::{SensorStream, SAMPLES_PER_DAY};

/// Samples in the seasonal cycle (364 days at 15-minute sampling).
pub const SAMPLES_PER_YEAR: usize = 364 * SAMPLES_PER_DAY;

/// Signal-model parameters for the surrogate generator. Pressures are meters
/// of head.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    /// Number of pressure sensors when building synthetic sensor sets.
    pub n_sensors: usize,
    /// Scenario length in days.
    pub days: usize,
    /// Mean pressure level per sensor.
    pub base_pressure: f64,
    /// Amplitude of the daily sinusoid.
    pub daily_amplitude: f64,
    /// Factor applied to the daily sinusoid on weekend days, in (0, 1].
    pub weekend_attenuation: f64,
    /// Amplitude of the year-period cosine trend.
    pub seasonal_amplitude: f64,
    /// Standard deviation of the i.i.d. Gaussian sensor noise.
    pub noise_std: f64,
    /// Pressure drop per millimeter of leak diameter at distance zero.
    pub leak_magnitude_per_mm: f64,
    /// Spatial decay length of the leak response in meters; `None` derives
    /// the median sensor-to-sensor shortest-path distance of the graph.
    pub attenuation_length: Option<f64>,
    /// Days over which the leak ramps from zero to full strength (0 = step).
    pub ramp_days: f64,
    /// Master seed; per-scenario seeds are derived from it.
    pub master_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_sensors: 29,
            days: 364,
            base_pressure: 50.0,
            daily_amplitude: 0.4,
            weekend_attenuation: 0.7,
            seasonal_amplitude: 0.1,
            noise_std: 0.05,
            leak_magnitude_per_mm: 0.008,
            attenuation_length: None,
            ramp_days: 1.0,
            master_seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::Value("n_sensors must be positive".into()));
        }
        if self.days == 0 {
            return Err(Error::Value("days must be positive".into()));
        }
        for (name, v) in [
            ("daily_amplitude", self.daily_amplitude),
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("leak_magnitude_per_mm", self.leak_magnitude_per_mm),
            ("ramp_days", self.ramp_days),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Value(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(Error::Value(format!(
                "noise_std must be > 0, got {}",
                self.noise_std
            )));
        }
        if !(self.weekend_attenuation > 0.0 && self.weekend_attenuation <= 1.0) {
            return Err(Error::Value(format!(
                "weekend_attenuation must be in (0, 1], got {}",
                self.weekend_attenuation
            )));
        }
        if let Some(lambda) = self.attenuation_length {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::Value(format!(
                    "attenuation_length must be > 0, got {lambda}"
                )));
            }
        }
        Ok(())
    }
}

/// Placement of one leak: the pipe it sits on, its diameter and its onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakSpec {
    pub edge_id: String,
    pub diameter_mm: f64,
    pub onset: usize,
}

/// A generated leak scenario: the pressure stream plus its ground truth.
/// The matching leak-free baseline is the stream generated from the same
/// graph, config and seed without a leak.
#[derive(Debug, Clone)]
pub struct LeakScenario {
    /// Virtual midpoint node of the leaking pipe.
    pub leak_node: String,
    pub diameter_mm: f64,
    pub onset: usize,
    pub stream: SensorStream,
    pub seed: u64,
}

/// Sidecar metadata persisted next to a scenario CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioMeta {
    pub leak_node: String,
    pub diameter_mm: f64,
    pub onset: usize,
    pub seed: u64,
    pub baseline_path: String,
}

/// Median (lower median) shortest-path distance over all sensor pairs.
pub fn median_sensor_distance(graph: &WdnGraph) -> Result<f64> {
    let sensors = graph.sensors();
    if sensors.len() < 2 {
        return Err(Error::Size(
            "attenuation length needs at least two sensors or an explicit value".into(),
        ));
    }
    let mut dists = Vec::with_capacity(sensors.len() * (sensors.len() - 1) / 2);
    for (i, &s) in sensors.iter().enumerate() {
        let table = graph.shortest_paths(graph.node_id(s))?;
        for &t in &sensors[i + 1..] {
            dists.push(table.distance(t));
        }
    }
    let mid = (dists.len() - 1) / 2;
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(dists[mid])
}

/// Generate a pressure stream for the graph's sensor nodes, optionally with
/// one injected leak. Pure function of `(graph, cfg, leak, seed)`.
pub fn generate_stream(
    graph: &WdnGraph,
    cfg: &GeneratorConfig,
    leak: Option<&LeakSpec>,
    seed: u64,
) -> Result<SensorStream> {
    cfg.validate()?;
    let sensors = graph.sensors();
    if sensors.is_empty() {
        return Err(Error::Size("graph has no sensor nodes assigned".into()));
    }
    let n = sensors.len();
    let len = cfg.days * SAMPLES_PER_DAY;

    // Per-sensor leak magnitudes at full strength; empty when no leak.
    let leak_profile: Vec<f64> = match leak {
        Some(spec) => {
            if spec.onset >= len {
                return Err(Error::Range(format!(
                    "leak onset {} is outside the stream of length {len}",
                    spec.onset
                )));
            }
            if !(spec.diameter_mm >= 0.0) || !spec.diameter_mm.is_finite() {
                return Err(Error::Value(format!(
                    "leak diameter must be >= 0, got {}",
                    spec.diameter_mm
                )));
            }
            let lambda = match cfg.attenuation_length {
                Some(l) => l,
                None => median_sensor_distance(graph)?,
            };
            let (split, mid) = graph.split_pipe(&spec.edge_id)?;
            let table = split.shortest_paths(&mid)?;
            split
                .sensors()
                .iter()
                .map(|&s| {
                    spec.diameter_mm
                        * cfg.leak_magnitude_per_mm
                        * (-table.distance(s) / lambda).exp()
                })
                .collect()
        }
        None => Vec::new(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> = (0..n)
        .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
        .collect();

    let omega_day = std::f64::consts::TAU / SAMPLES_PER_DAY as f64;
    let omega_year = std::f64::consts::TAU / SAMPLES_PER_YEAR as f64;
    let ramp_len = cfg.ramp_days * SAMPLES_PER_DAY as f64;

    let mut data = Vec::with_capacity(len * n);
    for t in 0..len {
        let day = t / SAMPLES_PER_DAY;
        let weekend = matches!(day % 7, 5 | 6);
        let day_factor = if weekend { cfg.weekend_attenuation } else { 1.0 };
        let seasonal = cfg.seasonal_amplitude * (omega_year * t as f64).cos();
        let ramp = match leak {
            Some(spec) if t >= spec.onset => {
                if ramp_len > 0.0 {
                    (((t - spec.onset) as f64) / ramp_len).min(1.0)
                } else {
                    1.0
                }
            }
            _ => 0.0,
        };
        for j in 0..n {
            let daily = cfg.daily_amplitude * (omega_day * t as f64 + phases[j]).sin() * day_factor;
            let noise: f64 = cfg.noise_std * rng.sample::<f64, _>(StandardNormal);
            let leak_term = if ramp > 0.0 { leak_profile[j] * ramp } else { 0.0 };
            data.push(cfg.base_pressure + daily + seasonal + noise - leak_term);
        }
    }
    SensorStream::from_rows(graph.sensor_ids(), 0, data)
}

/// Generate a leak scenario with ground truth (the split-pipe virtual node).
pub fn generate_scenario(
    graph: &WdnGraph,
    cfg: &GeneratorConfig,
    leak: &LeakSpec,
    seed: u64,
) -> Result<LeakScenario> {
    let stream = generate_stream(graph, cfg, Some(leak), seed)?;
    let (_, leak_node) = graph.split_pipe(&leak.edge_id)?;
    Ok(LeakScenario {
        leak_node,
        diameter_mm: leak.diameter_mm,
        onset: leak.onset,
        stream,
        seed,
    })
}

/// Write a stream as CSV: header `t,<sensor_id>,...`, one row per sample,
/// values printed at full round-trip precision.
pub fn write_csv<W: Write>(stream: &SensorStream, out: &mut W) -> Result<()> {
    let mut header = String::from("t");
    for id in stream.sensor_ids() {
        header.push(',');
        header.push_str(id);
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (i, row) in stream.rows().enumerate() {
        line.clear();
        line.push_str(&stream.t_of(i).to_string());
        for v in row {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_csv_path<P: AsRef<Path>>(stream: &SensorStream, path: P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(stream, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Read a stream back from CSV. Ragged rows, non-numeric cells and
/// non-contiguous sample indices are format errors.
pub fn read_csv<R: Read>(input: R) -> Result<SensorStream> {
    let mut lines = BufReader::new(input).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))??;
    let mut cols = header.split(',');
    if cols.next() != Some("t") {
        return Err(Error::Format("first CSV column must be `t`".into()));
    }
    let sensor_ids: Vec<String> = cols.map(str::to_string).collect();
    if sensor_ids.is_empty() {
        return Err(Error::Format("CSV has no sensor columns".into()));
    }
    let n = sensor_ids.len();

    let mut data = Vec::new();
    let mut start_t = None;
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: usize = fields
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|_| Error::Format(format!("row {}: unparseable sample index", i + 1)))?;
        match start_t {
            None => start_t = Some(t),
            Some(s) => {
                if t != s + rows {
                    return Err(Error::Format(format!(
                        "row {}: sample index {t} is not contiguous (expected {})",
                        i + 1,
                        s + rows
                    )));
                }
            }
        }
        let mut width = 0usize;
        for field in fields {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("row {}: non-numeric cell {field:?}", i + 1)))?;
            if !v.is_finite() {
                return Err(Error::Format(format!("row {}: non-finite cell {field:?}", i + 1)));
            }
            data.push(v);
            width += 1;
        }
        if width != n {
            return Err(Error::Format(format!(
                "row {}: expected {n} values, got {width}",
                i + 1
            )));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Format("CSV has no data rows".into()));
    }
    SensorStream::from_rows(sensor_ids, start_t.unwrap(), data)
}

pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<SensorStream> {
    read_csv(File::open(path)?)
}

/// Grid helper used by tests and the harness: `rows x cols` lattice with
/// seeded edge lengths and `n_sensors` spread evenly over the nodes.
pub fn synthetic_grid(
    rows: usize,
    cols: usize,
    n_sensors: usize,
    edge_len: (f64, f64),
    seed: u64,
) -> Result<WdnGraph> {
    if rows < 2 || cols < 2 {
        return Err(Error::Value("grid needs at least 2x2 nodes".into()));
    }
    let n_nodes = rows * cols;
    if n_sensors == 0 || n_sensors > n_nodes {
        return Err(Error::Value(format!(
            "sensor count {n_sensors} not in 1..={n_nodes}"
        )));
    }
    let (lo, hi) = edge_len;
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::Value("edge length bounds must satisfy 0 < lo <= hi".into()));
    }
    let node_id = |r: usize, c: usize| format!("n{r}_{c}");
    let node_ids: Vec<String> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| node_id(r, c)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                let len = rng.gen_range(lo..=hi);
                edges.push((format!("h{r}_{c}"), node_id(r, c), node_id(r, c + 1), len));
            }
            if r + 1 < rows {
                let len = rng.gen_range(lo..=hi);
                edges.push((format!("v{r}_{c}"), node_id(r, c), node_id(r + 1, c), len));
            }
        }
    }
    let graph = WdnGraph::new(node_ids, edges)?;
    // Spread sensors over the node list at a constant stride.
    let stride = n_nodes as f64 / n_sensors as f64;
    let sensor_ids: Vec<String> = (0..n_sensors)
        .map(|k| graph.node_ids()[(k as f64 * stride) as usize].clone())
        .collect();
    graph.with_sensors(&sensor_ids)
}
