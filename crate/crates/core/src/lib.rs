//! Drift detection and leakage localization for water distribution pressure streams.
//!
//! The crate is organized around a fixed 15-minute sampling grid (96 samples per
//! day, 672 per week). Pressure streams, week-aligned windows and the pipe
//! network graph live in [`stream`] and [`graph`]; [`scenario`] generates
//! surrogate pressure scenarios with injected leaks and persists them as CSV;
//! [`preprocess`] handles the weekly structure of the signals; [`modelloss`]
//! and [`distdetect`] implement the two families of drift detectors; and
//! [`localize`] maps detections back onto the network graph.

pub mod distdetect;
pub mod error;
pub mod graph;
pub mod inp;
pub mod localize;
pub mod matrix;
pub mod modelloss;
pub mod preprocess;
pub mod scenario;
pub mod seed;
pub mod stream;

pub use error::{Error, Result};
pub use graph::{DistanceTable, PipeEdge, WdnGraph};
pub use scenario::{GeneratorConfig, LeakScenario, LeakSpec};
pub use stream::{LabeledScore, SensorFrame, SensorStream, Window, SAMPLES_PER_DAY, SAMPLES_PER_WEEK};
