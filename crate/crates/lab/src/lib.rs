//! Batch harness around `conelab-core`: JSON experiment configs, seeded
//! parallel execution, CSV emission, and experiment-vs-theory comparison
//! reports.

pub mod batch;
pub mod config;
pub mod csv;
pub mod presets;
pub mod report;

pub use config::{load_config, ExperimentConfig, Mode, ResolvedConfig};
pub use report::{ComparisonReport, ComparisonRow};
