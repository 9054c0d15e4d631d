//! Experiment driver for the leakage-detection studies: model-loss sweeps,
//! distribution-detector displacement/size sweeps, the localization table
//! and the ShapeDD window analysis.

pub mod config;
pub mod plan;
pub mod report;
pub mod runner;
