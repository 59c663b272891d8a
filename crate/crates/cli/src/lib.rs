//! Experiment runner for segment-sliding reconstruction: sweep configs,
//! Monte-Carlo trials, bound-check suites and CSV/JSON reports.

pub mod config;
pub mod error;
pub mod experiment;
pub mod figures;
pub mod output;
pub mod suites;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use experiment::{run_experiment, ExperimentReport};
pub use figures::emit_figure_data;
