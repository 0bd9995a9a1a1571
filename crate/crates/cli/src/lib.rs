//! Experiment front-end for the `wbfm` binary: configuration, synthesis,
//! estimation and Monte-Carlo drivers writing CSV and binary signal files.

pub mod config;
pub mod error;
pub mod experiment;

pub use config::{ExperimentConfig, NoiseLevel, SignalFormat};
pub use error::CliError;
pub use experiment::{
    aggregate_criteria, cmd_estimate, cmd_run, cmd_synth, loglog_slope, montecarlo, Estimate, MonteCarlo, Outputs,
    RunRecord, Setup,
};
