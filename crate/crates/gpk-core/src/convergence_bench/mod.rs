//! Experiment orchestration: configuration, the cached stage pipeline,
//! output formats and power-law rate fits.

pub mod config;
pub mod fit;
pub mod io;
pub mod pipeline;

pub use config::{ExperimentConfig, FockScenarioFile};
pub use fit::{fit_rate, RateReport};
pub use pipeline::{run_pipeline, ReportBundle};
